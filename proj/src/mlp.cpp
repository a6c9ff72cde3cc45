#include "jslight/mlp.hpp"

#include <cmath>
#include <random>

#include <Eigen/SparseCore>

#include "jslight/error.hpp"

namespace jslight {

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Count vectors are mostly zeros; below this density the input layer runs sparse.
constexpr double kSparseDensity = 0.25;

bool mostly_zero(const Eigen::MatrixXd& x) {
    if (x.size() == 0) return false;
    return static_cast<double>((x.array() != 0.0).count()) < kSparseDensity * static_cast<double>(x.size());
}

Eigen::MatrixXd input_product(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
    if (!mostly_zero(x)) return x * w;
    const SparseRows xs = x.sparseView();
    return xs * w;
}

Eigen::MatrixXd input_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& delta) {
    if (!mostly_zero(x)) return x.transpose() * delta;
    const SparseRows xs = x.sparseView();
    return xs.transpose() * delta;
}

std::vector<std::size_t> make_dims(std::size_t n_features, const std::vector<std::size_t>& hidden) {
    if (n_features < 1) throw Error("model needs at least one input feature");
    std::vector<std::size_t> dims{n_features};
    for (auto h : hidden) {
        if (h < 1) throw Error("hidden layer width must be positive");
        dims.push_back(h);
    }
    dims.push_back(kCategoryCount);
    return dims;
}

void check_batch(const ModelParameters& model, const Batch& batch) {
    if (batch.inputs.rows() == 0) throw Error("batch is empty");
    if (static_cast<std::size_t>(batch.inputs.cols()) != model.n_features()) {
        throw Error("batch width " + std::to_string(batch.inputs.cols()) + " does not match model input " +
                    std::to_string(model.n_features()));
    }
    if (static_cast<std::size_t>(batch.inputs.rows()) != batch.labels.size()) {
        throw Error("batch has " + std::to_string(batch.labels.size()) + " labels for " +
                    std::to_string(batch.inputs.rows()) + " rows");
    }
    for (auto l : batch.labels) {
        if (l >= kCategoryCount) throw Error("label index out of range");
    }
}

}  // namespace

std::size_t ModelParameters::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

ModelParameters init_model(std::size_t n_features, std::uint64_t seed, std::vector<std::size_t> hidden) {
    ModelParameters m;
    m.layer_dims = make_dims(n_features, hidden);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i + 1 < m.layer_dims.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(m.layer_dims[i]);
        const auto out = static_cast<Eigen::Index>(m.layer_dims[i + 1]);
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
        DenseLayer layer{Eigen::MatrixXd(in, out), Eigen::VectorXd::Zero(out)};
        // Fill row-major so the draw order matches the serialized layout.
        for (Eigen::Index r = 0; r < in; ++r) {
            for (Eigen::Index c = 0; c < out; ++c) layer.weights(r, c) = dist(rng);
        }
        m.layers.push_back(std::move(layer));
    }
    return m;
}

ModelParameters zero_model(std::size_t n_features, std::vector<std::size_t> hidden) {
    ModelParameters m;
    m.layer_dims = make_dims(n_features, hidden);
    for (std::size_t i = 0; i + 1 < m.layer_dims.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(m.layer_dims[i]);
        const auto out = static_cast<Eigen::Index>(m.layer_dims[i + 1]);
        m.layers.push_back({Eigen::MatrixXd::Zero(in, out), Eigen::VectorXd::Zero(out)});
    }
    return m;
}

void validate(const ModelParameters& model) {
    if (model.layer_dims.size() < 2 || model.layers.size() + 1 != model.layer_dims.size()) {
        throw Error("model layer count does not match layer_dims");
    }
    if (model.layer_dims.back() != kCategoryCount) throw Error("model output width must be 8");
    if (!model.vocabulary.empty() && model.vocabulary.size() != model.n_features()) {
        throw Error("model vocabulary size does not match its input width");
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        if (static_cast<std::size_t>(l.weights.rows()) != model.layer_dims[i] ||
            static_cast<std::size_t>(l.weights.cols()) != model.layer_dims[i + 1] ||
            static_cast<std::size_t>(l.bias.size()) != model.layer_dims[i + 1]) {
            throw Error("layer " + std::to_string(i) + " shape does not chain");
        }
        if (!l.weights.allFinite() || !l.bias.allFinite()) {
            throw Error("layer " + std::to_string(i) + " holds non-finite values");
        }
    }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        out.row(r) = (logits.row(r).array() - m).exp();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

Eigen::MatrixXd to_input_matrix(std::span<const FeatureVector> rows) {
    if (rows.empty()) return {};
    const auto width = static_cast<Eigen::Index>(rows.front().counts.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].counts.size()) != width) throw Error("ragged feature rows");
        for (Eigen::Index c = 0; c < width; ++c) {
            x(static_cast<Eigen::Index>(r), c) = static_cast<double>(rows[r].counts[static_cast<std::size_t>(c)]);
        }
    }
    return x;
}

Eigen::VectorXd forward(const ModelParameters& model, const FeatureVector& x) {
    if (x.counts.size() != model.n_features()) {
        throw Error("feature vector length " + std::to_string(x.counts.size()) + " does not match model input " +
                    std::to_string(model.n_features()));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.counts.size()));
    for (std::size_t i = 0; i < x.counts.size(); ++i) v(static_cast<Eigen::Index>(i)) = x.counts[i];
    return forward(model, v);
}

Eigen::VectorXd forward(const ModelParameters& model, const Eigen::VectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != model.n_features()) {
        throw Error("input length " + std::to_string(x.size()) + " does not match model input " +
                    std::to_string(model.n_features()));
    }
    Eigen::VectorXd a = x;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        Eigen::VectorXd z = l.weights.transpose() * a + l.bias;
        if (i + 1 < model.layers.size()) {
            a = z.cwiseMax(0.0);
        } else {
            return softmax(z);
        }
    }
    return a;
}

Eigen::MatrixXd forward_batch(const ModelParameters& model, const Eigen::MatrixXd& inputs) {
    if (static_cast<std::size_t>(inputs.cols()) != model.n_features()) {
        throw Error("batch width does not match model input");
    }
    Eigen::MatrixXd a;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        Eigen::MatrixXd z = i == 0 ? input_product(inputs, l.weights) : a * l.weights;
        z.rowwise() += l.bias.transpose();
        if (i + 1 < model.layers.size()) {
            a = z.cwiseMax(0.0);
        } else {
            a = softmax_rows(z);
        }
    }
    return a;
}

double batch_loss(const ModelParameters& model, const Batch& batch, double l2) {
    check_batch(model, batch);
    Eigen::MatrixXd a;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        Eigen::MatrixXd z = i == 0 ? input_product(batch.inputs, model.layers[i].weights) : a * model.layers[i].weights;
        z.rowwise() += model.layers[i].bias.transpose();
        a = i + 1 < model.layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    // log-softmax straight from the logits avoids log(0) on saturated rows.
    double total = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double m = a.row(r).maxCoeff();
        const double lse = m + std::log((a.row(r).array() - m).exp().sum());
        total += lse - a(r, static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(r)]));
    }
    double loss = total / static_cast<double>(a.rows());
    if (l2 > 0.0) {
        double sq = 0.0;
        for (const auto& l : model.layers) sq += l.weights.squaredNorm();
        loss += 0.5 * l2 * sq;
    }
    return loss;
}

double loss_and_gradients(const ModelParameters& model, const Batch& batch, double l2,
                          std::vector<DenseLayer>& grads) {
    check_batch(model, batch);
    const std::size_t n_layers = model.layers.size();
    const auto rows = batch.inputs.rows();

    // activations[0] is the input; activations[i + 1] is the output of layer i
    // (post-ReLU for hidden layers, logits for the last one).
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(n_layers + 1);
    activations.push_back(batch.inputs);
    for (std::size_t i = 0; i < n_layers; ++i) {
        Eigen::MatrixXd z = i == 0 ? input_product(batch.inputs, model.layers[i].weights)
                                   : activations.back() * model.layers[i].weights;
        z.rowwise() += model.layers[i].bias.transpose();
        if (i + 1 < n_layers) z = z.cwiseMax(0.0);
        activations.push_back(std::move(z));
    }

    const Eigen::MatrixXd& logits = activations.back();
    Eigen::MatrixXd delta = softmax_rows(logits);
    double total = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto label = static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(r)]);
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        total += lse - logits(r, label);
        delta(r, label) -= 1.0;
    }
    const double inv_rows = 1.0 / static_cast<double>(rows);
    delta *= inv_rows;
    double loss = total * inv_rows;

    grads.resize(n_layers);
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& layer = model.layers[k];
        grads[k].weights = k == 0 ? input_gradient(batch.inputs, delta) : activations[k].transpose() * delta;
        grads[k].bias = delta.colwise().sum().transpose();
        if (l2 > 0.0) grads[k].weights += l2 * layer.weights;
        if (k > 0) {
            Eigen::MatrixXd back = delta * layer.weights.transpose();
            // ReLU derivative: zero where the unit was inactive.
            delta = (activations[k].array() > 0.0).select(back, 0.0);
        }
    }
    if (l2 > 0.0) {
        double sq = 0.0;
        for (const auto& l : model.layers) sq += l.weights.squaredNorm();
        loss += 0.5 * l2 * sq;
    }
    return loss;
}

}  // namespace jslight
