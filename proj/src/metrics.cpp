#include "jslight/metrics.hpp"

#include <nlohmann/json.hpp>

#include "jslight/error.hpp"
#include "jslight/train.hpp"

namespace jslight {

EvalReport evaluate_predictions(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
    if (truth.empty()) throw Error("cannot evaluate an empty dataset");
    if (truth.size() != predicted.size()) throw Error("truth and prediction counts differ");
    EvalReport rep;
    rep.total = truth.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= kCategoryCount || predicted[i] >= kCategoryCount) throw Error("class index out of range");
        ++rep.confusion[truth[i]][predicted[i]];
        if (truth[i] == predicted[i]) ++correct;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.total);

    double wp = 0.0;
    double wr = 0.0;
    double wf = 0.0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        std::size_t tp = rep.confusion[c][c];
        std::size_t support = 0;
        std::size_t predicted_pos = 0;
        for (std::size_t k = 0; k < kCategoryCount; ++k) {
            support += rep.confusion[c][k];
            predicted_pos += rep.confusion[k][c];
        }
        auto& m = rep.per_class[c];
        m.support = support;
        m.precision = predicted_pos ? static_cast<double>(tp) / static_cast<double>(predicted_pos) : 0.0;
        m.recall = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        const auto s = static_cast<double>(support);
        wp += s * m.precision;
        wr += s * m.recall;
        wf += s * m.f1;
    }
    const auto n = static_cast<double>(rep.total);
    rep.weighted_precision = wp / n;
    rep.weighted_recall = wr / n;
    rep.weighted_f1 = wf / n;
    return rep;
}

EvalReport evaluate(const ModelParameters& model, const LabeledDataset& dataset) {
    if (dataset.empty()) throw Error("cannot evaluate an empty dataset");
    const Batch batch = make_batch(dataset);
    const Eigen::MatrixXd probs = forward_batch(model, batch.inputs);
    std::vector<std::size_t> predicted(batch.labels.size());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c) {
            if (probs(r, c) > probs(r, best)) best = c;
        }
        predicted[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
    }
    return evaluate_predictions(batch.labels, predicted);
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["total"] = report.total;
    j["accuracy"] = report.accuracy;
    j["weighted"] = {{"precision", report.weighted_precision},
                     {"recall", report.weighted_recall},
                     {"f1", report.weighted_f1}};
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        const auto& m = report.per_class[c];
        per[std::string(to_string(category_from_index(c)))] = {
            {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    j["per_category"] = per;
    j["confusion"] = report.confusion;
    return j.dump();
}

}  // namespace jslight
