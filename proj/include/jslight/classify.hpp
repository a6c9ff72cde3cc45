#pragma once

#include <array>
#include <span>

#include "jslight/category.hpp"
#include "jslight/features.hpp"
#include "jslight/mlp.hpp"

namespace jslight {

inline constexpr double kDefaultThreshold = 0.5;

struct ClassificationResult {
    Category category = Category::unassigned;
    double confidence = 0.0;  // max(probs)
    std::array<double, kCategoryCount> probs{};
};

// The threshold gate on a probability vector: the argmax category (lowest
// index on ties) when max(probs) > threshold, else unassigned. Strict `>`:
// a peak equal to the threshold is unassigned.
// Throws jslight::Error when threshold is outside [0, 1).
ClassificationResult gate_probabilities(std::span<const double, kCategoryCount> probs, double threshold);

// forward() followed by gate_probabilities().
ClassificationResult assign_category(const ModelParameters& model, const FeatureVector& x, double threshold);

}  // namespace jslight
