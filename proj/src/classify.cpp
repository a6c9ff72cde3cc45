#include "jslight/classify.hpp"

#include <algorithm>

#include "jslight/error.hpp"

namespace jslight {

ClassificationResult gate_probabilities(std::span<const double, kCategoryCount> probs, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw Error("threshold must be in [0, 1)");
    ClassificationResult r;
    std::copy(probs.begin(), probs.end(), r.probs.begin());
    std::size_t best = 0;
    for (std::size_t i = 1; i < kCategoryCount; ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    r.confidence = probs[best];
    r.category = r.confidence > threshold ? category_from_index(best) : Category::unassigned;
    return r;
}

ClassificationResult assign_category(const ModelParameters& model, const FeatureVector& x, double threshold) {
    const Eigen::VectorXd p = forward(model, x);
    std::array<double, kCategoryCount> probs{};
    for (std::size_t i = 0; i < kCategoryCount; ++i) probs[i] = p(static_cast<Eigen::Index>(i));
    return gate_probabilities(probs, threshold);
}

}  // namespace jslight
