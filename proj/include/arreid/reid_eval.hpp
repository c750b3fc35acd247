#pragma once

// Retrieval metrics for re-identification: gallery ranking with
// same-camera filtering, per-query average precision, mAP and CMC.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "arreid/kernels.hpp"
#include "arreid/matrix.hpp"

namespace arreid {

struct FeatureSet {
    Matrix features;  // N × d
    std::vector<std::uint64_t> vehicle_ids;
    std::vector<std::uint32_t> camera_ids;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
    void validate() const;
};

enum class Distance { cosine, squared_euclidean };

struct EvalProtocol {
    Distance distance = Distance::cosine;
    bool exclude_same_camera = true;
    std::vector<std::size_t> cmc_ranks{1, 5, 10};
    // L2-normalize features before computing distances (a no-op for cosine ranking).
    bool l2_normalize = true;

    void validate() const;
    friend bool operator==(const EvalProtocol&, const EvalProtocol&) = default;
};

struct RankedGallery {
    std::vector<std::size_t> order;      // valid gallery indices, nearest first
    std::vector<double> distances;       // aligned with `order`
    std::vector<bool> valid;             // per gallery index
};

// Ties are broken by gallery index. Gallery items that share both vehicle id
// and camera id with the query are masked when the protocol asks for it.
RankedGallery rank_gallery(std::span<const double> query, const FeatureSet& gallery, const EvalProtocol& protocol,
                           std::uint64_t query_vehicle, std::uint32_t query_camera);

// Σ precision@hit / R. nullopt when nothing is relevant (the query is skipped).
std::optional<double> average_precision(const std::vector<bool>& ranked_relevance);

// cmc[r-1] = share of non-skipped queries whose first hit is at rank ≤ r.
std::vector<double> cmc_curve(const std::vector<std::vector<bool>>& ranked_relevance, std::size_t max_rank);

struct EvalReport {
    double mAP = 0.0;
    std::vector<std::pair<std::size_t, double>> cmc;    // at protocol.cmc_ranks
    std::vector<std::optional<double>> per_query_ap;    // nullopt = skipped
    std::size_t skipped_queries = 0;
    std::vector<double> cmc_full;                       // ranks 1..max(cmc_ranks, 50)

    double rank(std::size_t r) const;
};

EvalReport evaluate(const FeatureSet& queries, const FeatureSet& gallery, const EvalProtocol& protocol = {},
                    Exec exec = Exec::parallel);

}  // namespace arreid
