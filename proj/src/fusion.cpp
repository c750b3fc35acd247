#include "arreid/fusion.hpp"

#include <cmath>

#include "arreid/error.hpp"

namespace arreid {

void FusionPolicy::validate() const {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i].weight > 0.0)) throw Error(ErrorKind::config, "fusion weights must be positive");
        if (i > 0 && !(thresholds[i].upper_bound > thresholds[i - 1].upper_bound)) {
            throw Error(ErrorKind::config, "fusion threshold bounds must be strictly increasing");
        }
    }
    if (!(default_weight > 0.0)) throw Error(ErrorKind::config, "fusion default weight must be positive");
}

double adaptive_weight(double model_ar, double image_ar, const FusionPolicy& policy) {
    if (!(model_ar > 0.0) || !(image_ar > 0.0)) {
        throw Error(ErrorKind::config, "aspect ratios must be positive");
    }
    const double delta = std::abs(model_ar - image_ar);
    for (const auto& t : policy.thresholds) {
        if (delta <= t.upper_bound + kBoundSlack) return t.weight;
    }
    return policy.default_weight;
}

std::vector<double> fuse_features(std::span<const TaggedFeature> features, double image_ar,
                                  const FusionPolicy& policy) {
    if (features.empty()) throw Error(ErrorKind::empty_input, "nothing to fuse");
    const std::size_t d = features.front().vector.size();
    std::vector<double> out(d, 0.0);
    for (const auto& f : features) {
        if (f.vector.size() != d) throw Error(ErrorKind::shape, "fused features differ in dimension");
        const double w = adaptive_weight(f.model_ar, image_ar, policy);
        for (std::size_t k = 0; k < d; ++k) out[k] += w * f.vector[k];
    }
    return out;
}

}  // namespace arreid
