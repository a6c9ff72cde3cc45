#pragma once

#include <array>
#include <span>
#include <string>

#include "jslight/category.hpp"
#include "jslight/dataset.hpp"
#include "jslight/mlp.hpp"

namespace jslight {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // true rows of this class
};

struct EvalReport {
    std::array<ClassMetrics, kCategoryCount> per_class{};
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    // confusion[true][predicted]
    std::array<std::array<std::size_t, kCategoryCount>, kCategoryCount> confusion{};
    std::size_t total = 0;
};

// Metrics from paired true/predicted class indices. A metric whose
// denominator is zero is reported as 0. Weighted aggregates are
// support-weighted means over the classes.
// Throws jslight::Error on empty or mismatched inputs.
EvalReport evaluate_predictions(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

// Argmax predictions (threshold 0, so nothing is unassigned) over the
// dataset. Throws on an empty dataset.
EvalReport evaluate(const ModelParameters& model, const LabeledDataset& dataset);

std::string eval_report_to_json(const EvalReport& report);

}  // namespace jslight
