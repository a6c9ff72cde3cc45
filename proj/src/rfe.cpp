#include "jslight/rfe.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "jslight/category.hpp"
#include "jslight/error.hpp"
#include "jslight/mlp.hpp"
#include "jslight/train.hpp"

namespace jslight {

Eigen::VectorXd softmax_importance(const Eigen::MatrixXd& inputs, const std::vector<std::size_t>& labels,
                                   const RfeConfig& cfg) {
    const auto n = inputs.rows();
    const auto d = inputs.cols();
    const auto k = static_cast<Eigen::Index>(kCategoryCount);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, k);
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(k);

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto batch = static_cast<std::size_t>(std::max<std::size_t>(1, cfg.batch_size));

    for (std::size_t epoch = 0; epoch < cfg.trainer_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const auto rows = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd x(rows, d);
            for (std::size_t i = start; i < end; ++i) x.row(static_cast<Eigen::Index>(i - start)) = inputs.row(order[i]);
            Eigen::MatrixXd logits = x * w;
            logits.rowwise() += b;
            Eigen::MatrixXd delta = softmax_rows(logits);
            for (std::size_t i = start; i < end; ++i) {
                delta(static_cast<Eigen::Index>(i - start),
                      static_cast<Eigen::Index>(labels[static_cast<std::size_t>(order[i])])) -= 1.0;
            }
            delta /= static_cast<double>(rows);
            w -= cfg.learning_rate * (x.transpose() * delta + cfg.l2_penalty * w);
            b -= cfg.learning_rate * delta.colwise().sum();
        }
        if (!w.allFinite()) throw Error("ranking trainer diverged; lower the RFE learning rate");
    }
    return w.rowwise().norm();
}

RfeResult rfe_select(const LabeledDataset& dataset, const Vocabulary& vocab, const RfeConfig& cfg) {
    if (dataset.empty()) throw Error("RFE needs a nonempty dataset");
    if (cfg.target_k == 0) throw Error("RFE target_k must be positive");
    if (cfg.target_k > vocab.size()) {
        throw Error("RFE target_k " + std::to_string(cfg.target_k) + " exceeds vocabulary size " +
                    std::to_string(vocab.size()));
    }
    if (cfg.step && *cfg.step == 0) throw Error("RFE step must be at least 1");
    if (cfg.ranking_trainer != "softmax") throw Error("unknown RFE ranking trainer \"" + cfg.ranking_trainer + "\"");
    if (dataset.rows.front().features.counts.size() != vocab.size()) {
        throw Error("dataset width does not match the vocabulary");
    }

    const Batch all = make_batch(dataset);
    std::vector<std::size_t> alive(vocab.size());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    std::vector<std::string> eliminated;

    std::size_t round = 0;
    while (alive.size() > cfg.target_k) {
        Eigen::MatrixXd x(all.inputs.rows(), static_cast<Eigen::Index>(alive.size()));
        for (std::size_t j = 0; j < alive.size(); ++j) {
            x.col(static_cast<Eigen::Index>(j)) = all.inputs.col(static_cast<Eigen::Index>(alive[j]));
        }
        RfeConfig round_cfg = cfg;
        round_cfg.seed = cfg.seed + round++;
        const Eigen::VectorXd importance = softmax_importance(x, all.labels, round_cfg);

        const std::size_t step =
            cfg.step.value_or(std::max<std::size_t>(1, alive.size() / 20));
        const std::size_t drop = std::min(step, alive.size() - cfg.target_k);

        std::vector<std::size_t> rank(alive.size());
        std::iota(rank.begin(), rank.end(), std::size_t{0});
        std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            return importance(static_cast<Eigen::Index>(a)) < importance(static_cast<Eigen::Index>(b));
        });
        std::vector<bool> remove(alive.size(), false);
        for (std::size_t i = 0; i < drop; ++i) {
            remove[rank[i]] = true;
            eliminated.push_back(vocab.names()[alive[rank[i]]]);
        }
        std::vector<std::size_t> next;
        next.reserve(alive.size() - drop);
        for (std::size_t j = 0; j < alive.size(); ++j) {
            if (!remove[j]) next.push_back(alive[j]);
        }
        alive = std::move(next);
    }

    if (eliminated.empty()) return {vocab, {}};
    std::string version = vocab.version() + "+rfe" + std::to_string(cfg.target_k);
    return {vocab.subset(alive, std::move(version)), std::move(eliminated)};
}

}  // namespace jslight
