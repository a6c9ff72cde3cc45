#include "jslight/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "jslight/error.hpp"

namespace jslight {

void validate(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw Error("learning_rate must be positive");
    }
    if (cfg.batch_size == 0) throw Error("batch_size must be positive");
    if (cfg.epochs == 0) throw Error("epochs must be positive");
    if (cfg.l2_penalty < 0.0) throw Error("l2_penalty must be nonnegative");
    if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0) {
        throw Error("validation_fraction must be in [0, 1)");
    }
}

Batch make_batch(const LabeledDataset& dataset) {
    Batch b;
    std::vector<FeatureVector> feats;
    feats.reserve(dataset.rows.size());
    for (const auto& r : dataset.rows) {
        if (!is_assigned(r.label)) throw Error("row \"" + r.key + "\" has no category");
        feats.push_back(r.features);
        b.labels.push_back(index_of(r.label));
    }
    b.inputs = to_input_matrix(feats);
    return b;
}

double mean_loss(const ModelParameters& model, const LabeledDataset& dataset) {
    return batch_loss(model, make_batch(dataset), 0.0);
}

TrainResult train(ModelParameters model, const LabeledDataset& dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    validate(cfg);
    validate(model);
    if (dataset.empty()) throw Error("cannot train on an empty dataset");
    if (dataset.rows.front().features.counts.size() != model.n_features()) {
        throw Error("dataset width " + std::to_string(dataset.rows.front().features.counts.size()) +
                    " does not match model input " + std::to_string(model.n_features()));
    }

    const auto split = stratified_split(dataset, cfg.validation_fraction, cfg.seed);
    const Batch all_train = make_batch(split.train);
    const std::optional<Batch> validation =
        split.holdout.empty() ? std::nullopt : std::optional<Batch>(make_batch(split.holdout));

    TrainResult result;
    const auto record = [&](std::size_t epoch) {
        EpochStats s{epoch, batch_loss(model, all_train, 0.0), std::nullopt};
        if (validation) s.validation_loss = batch_loss(model, *validation, 0.0);
        if (!std::isfinite(s.train_loss) || (s.validation_loss && !std::isfinite(*s.validation_loss))) {
            std::ostringstream msg;
            msg << "non-finite loss at epoch " << epoch << " (train " << s.train_loss
                << "); lower the learning rate (currently " << cfg.learning_rate << ")";
            throw Error(msg.str());
        }
        result.history.push_back(s);
        if (on_epoch) on_epoch(s);
        return s;
    };

    const auto initial = record(0);
    double best = initial.validation_loss.value_or(initial.train_loss);
    ModelParameters best_model = model;
    std::size_t since_best = 0;

    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(all_train.inputs.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<DenseLayer> grads;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Batch mb;
            mb.inputs.resize(static_cast<Eigen::Index>(end - start), all_train.inputs.cols());
            mb.labels.resize(end - start);
            for (std::size_t k = start; k < end; ++k) {
                mb.inputs.row(static_cast<Eigen::Index>(k - start)) = all_train.inputs.row(order[k]);
                mb.labels[k - start] = all_train.labels[static_cast<std::size_t>(order[k])];
            }
            const double loss = loss_and_gradients(model, mb, cfg.l2_penalty, grads);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite loss in epoch " << epoch << "; lower the learning rate (currently "
                    << cfg.learning_rate << ")";
                throw Error(msg.str());
            }
            for (std::size_t i = 0; i < model.layers.size(); ++i) {
                model.layers[i].weights -= cfg.learning_rate * grads[i].weights;
                model.layers[i].bias -= cfg.learning_rate * grads[i].bias;
            }
        }

        const auto stats = record(epoch);
        const double score = stats.validation_loss.value_or(stats.train_loss);
        if (score < best) {
            best = score;
            best_model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (validation && cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    result.model = validation ? std::move(best_model) : std::move(model);
    if (!validation) result.best_epoch = result.history.back().epoch;
    return result;
}

GradientCheckResult gradient_check(const ModelParameters& model, const Batch& batch, double epsilon,
                                   std::size_t samples, std::uint64_t seed, double l2) {
    if (batch.inputs.rows() == 0 || batch.labels.empty()) throw Error("gradient check needs a nonempty batch");
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");

    std::vector<DenseLayer> grads;
    loss_and_gradients(model, batch, l2, grads);

    // Flat coordinate space: for each layer, weights (column-major) then bias.
    std::vector<std::size_t> offsets{0};
    for (const auto& l : model.layers) {
        offsets.push_back(offsets.back() + static_cast<std::size_t>(l.weights.size() + l.bias.size()));
    }
    const std::size_t total = offsets.back();

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min(samples, total));

    ModelParameters probe = model;
    GradientCheckResult result;
    for (auto flat : coords) {
        const auto layer = static_cast<std::size_t>(
            std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
        auto local = static_cast<Eigen::Index>(flat - offsets[layer]);
        auto& pl = probe.layers[layer];
        const auto n_weights = pl.weights.size();
        double* slot = local < n_weights ? pl.weights.data() + local : pl.bias.data() + (local - n_weights);
        const double analytic =
            local < n_weights ? grads[layer].weights.data()[local] : grads[layer].bias.data()[local - n_weights];

        const double original = *slot;
        *slot = original + epsilon;
        const double up = batch_loss(probe, batch, l2);
        *slot = original - epsilon;
        const double down = batch_loss(probe, batch, l2);
        *slot = original;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
        ++result.coordinates;
    }
    return result;
}

}  // namespace jslight
