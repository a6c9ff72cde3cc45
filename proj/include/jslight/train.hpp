#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "jslight/dataset.hpp"
#include "jslight/mlp.hpp"

namespace jslight {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 42;
    double l2_penalty = 1e-4;
    // Stop after this many epochs without a validation-loss improvement;
    // 0 disables early stopping.
    std::size_t early_stop_patience = 20;
    // Fraction of each category held back for early stopping.
    double validation_fraction = 0.2;
};

// Throws jslight::Error on a nonpositive learning rate or batch size.
void validate(const TrainConfig& cfg);

struct EpochStats {
    std::size_t epoch = 0;  // 0 is the untrained model
    double train_loss = 0.0;
    std::optional<double> validation_loss;
};

struct TrainResult {
    ModelParameters model;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch gradient descent on mean cross-entropy (+ L2 on weights).
// Splits off a stratified validation set for early stopping and returns the
// parameters from the epoch with the lowest validation loss (or the last
// epoch when there is no validation data). Deterministic in cfg.seed.
//
// Throws jslight::Error on an empty dataset, a width mismatch, or a
// non-finite loss.
TrainResult train(ModelParameters model, const LabeledDataset& dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

Batch make_batch(const LabeledDataset& dataset);

// Mean cross-entropy of the model over every row, without regularization.
double mean_loss(const ModelParameters& model, const LabeledDataset& dataset);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
};

// Compares backprop gradients with central differences
// (L(θ + ε e_i) - L(θ - ε e_i)) / 2ε on `samples` randomly chosen parameter
// coordinates. Relative error is |a - n| / max(|a|, |n|, 1e-6); the floor
// keeps roundoff on near-zero gradients from dominating.
// Throws jslight::Error on an empty batch.
GradientCheckResult gradient_check(const ModelParameters& model, const Batch& batch, double epsilon = 1e-5,
                                   std::size_t samples = 200, std::uint64_t seed = 0, double l2 = 0.0);

}  // namespace jslight
