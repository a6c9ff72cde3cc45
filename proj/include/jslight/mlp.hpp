#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jslight/category.hpp"
#include "jslight/features.hpp"

namespace jslight {

inline constexpr std::size_t kDefaultHidden1 = 350;
inline constexpr std::size_t kDefaultHidden2 = 50;

// One affine layer: out = in * weights + bias, weights shaped (in x out).
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

// Feed-forward network input -> hidden... -> 8 with ReLU hidden layers and
// a softmax output.
struct ModelParameters {
    std::vector<std::size_t> layer_dims;  // [n_features, 350, 50, 8] by default
    std::vector<DenseLayer> layers;
    std::string vocab_version;
    std::vector<std::string> vocabulary;  // names in feature order; may be empty
    double threshold_default = 0.5;

    std::size_t n_features() const { return layer_dims.front(); }
    std::size_t parameter_count() const;
};

// He-normal weights, zero biases. Deterministic in `seed`.
// Throws jslight::Error when n_features < 1 or a hidden width is 0.
ModelParameters init_model(std::size_t n_features, std::uint64_t seed,
                           std::vector<std::size_t> hidden = {kDefaultHidden1, kDefaultHidden2});

// Same shapes as init_model, every weight and bias zero.
ModelParameters zero_model(std::size_t n_features,
                           std::vector<std::size_t> hidden = {kDefaultHidden1, kDefaultHidden2});

// Throws when shapes do not chain or a value is not finite.
void validate(const ModelParameters& model);

// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Row-wise softmax of a (batch x classes) logit matrix.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

Eigen::MatrixXd to_input_matrix(std::span<const FeatureVector> rows);

// Class probabilities for a single input. Throws on dimension mismatch.
Eigen::VectorXd forward(const ModelParameters& model, const FeatureVector& x);
Eigen::VectorXd forward(const ModelParameters& model, const Eigen::VectorXd& x);

// Row-wise class probabilities for a (batch x n_features) matrix.
Eigen::MatrixXd forward_batch(const ModelParameters& model, const Eigen::MatrixXd& inputs);

struct Batch {
    Eigen::MatrixXd inputs;           // batch x n_features
    std::vector<std::size_t> labels;  // class index per row
};

// Mean cross-entropy over the batch plus 0.5 * l2 * sum of squared weights
// (biases are not penalized).
double batch_loss(const ModelParameters& model, const Batch& batch, double l2 = 0.0);

// Same loss, with gradients written into `grads` (shaped like model.layers).
double loss_and_gradients(const ModelParameters& model, const Batch& batch, double l2,
                          std::vector<DenseLayer>& grads);

}  // namespace jslight
