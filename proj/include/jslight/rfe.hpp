#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jslight/dataset.hpp"
#include "jslight/vocabulary.hpp"

namespace jslight {

inline constexpr std::size_t kDefaultRfeTarget = 508;

struct RfeConfig {
    std::size_t target_k = kDefaultRfeTarget;
    // Features removed per round; nullopt means max(1, 5% of the remaining).
    std::optional<std::size_t> step;
    // Only "softmax" (single-layer softmax regression) is available.
    std::string ranking_trainer = "softmax";
    std::uint64_t seed = 0;
    std::size_t trainer_epochs = 30;
    double learning_rate = 0.05;
    double l2_penalty = 1e-3;
    std::size_t batch_size = 64;
};

struct RfeResult {
    Vocabulary vocabulary;
    std::vector<std::string> elimination_order;  // worst first
};

// Feature importances from one ranking fit: the L2 norm of each feature's
// weight row in a softmax regression trained on `inputs`.
Eigen::VectorXd softmax_importance(const Eigen::MatrixXd& inputs, const std::vector<std::size_t>& labels,
                                   const RfeConfig& cfg);

// Repeatedly fits the ranking trainer on the surviving features and drops
// the lowest-importance ones (ties: lower vocabulary index first) until
// exactly cfg.target_k remain. Deterministic in cfg.seed.
//
// Throws jslight::Error on an empty dataset, a width mismatch, target_k of
// zero or above the vocabulary size, a zero step, or an unknown trainer.
RfeResult rfe_select(const LabeledDataset& dataset, const Vocabulary& vocab, const RfeConfig& cfg);

}  // namespace jslight
