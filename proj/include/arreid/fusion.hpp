#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace arreid {

struct TaggedFeature {
    std::vector<double> vector;
    double model_ar = 1.0;  // aspect ratio of the model's training input
};

struct WeightThreshold {
    double upper_bound = 0.0;  // inclusive bound on |model_ar − image_ar|
    double weight = 1.0;

    friend bool operator==(const WeightThreshold&, const WeightThreshold&) = default;
};

struct FusionPolicy {
    std::vector<WeightThreshold> thresholds{{0.3, 1.3}, {0.6, 1.0}};
    double default_weight = 0.9;

    void validate() const;
    friend bool operator==(const FusionPolicy&, const FusionPolicy&) = default;
};

// Slack on the inclusive bound so that e.g. |1.3 − 1.0| (0.30000000000000004
// in binary) still counts as 0.3.
inline constexpr double kBoundSlack = 1e-9;

double adaptive_weight(double model_ar, double image_ar, const FusionPolicy& policy = {});

// Raw weighted sum Σ w_m · f_m; weights are not normalized.
std::vector<double> fuse_features(std::span<const TaggedFeature> features, double image_ar,
                                  const FusionPolicy& policy = {});

}  // namespace arreid
