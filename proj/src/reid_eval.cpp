#include "arreid/reid_eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "arreid/error.hpp"

namespace arreid {

namespace {

std::vector<double> normalized(std::span<const double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    std::vector<double> out(v.begin(), v.end());
    if (norm > 0.0) {
        for (double& x : out) x /= norm;
    }
    return out;
}

double distance_between(std::span<const double> q, std::span<const double> g, Distance kind) {
    if (kind == Distance::cosine) {
        double dot = 0.0, qq = 0.0, gg = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) {
            dot += q[k] * g[k];
            qq += q[k] * q[k];
            gg += g[k] * g[k];
        }
        const double denom = std::sqrt(qq) * std::sqrt(gg);
        return 1.0 - (denom > 0.0 ? dot / denom : 0.0);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double d = q[k] - g[k];
        acc += d * d;
    }
    return acc;
}

struct QueryResult {
    std::vector<bool> relevance;
    std::optional<double> ap;
};

}  // namespace

void FeatureSet::validate() const {
    if (vehicle_ids.size() != features.rows() || camera_ids.size() != features.rows()) {
        throw Error(ErrorKind::shape, "feature set rows, vehicle ids and camera ids must agree in count");
    }
    for (double v : features.values()) {
        if (!std::isfinite(v)) throw Error(ErrorKind::shape, "feature set contains NaN or Inf");
    }
}

void EvalProtocol::validate() const {
    if (cmc_ranks.empty()) throw Error(ErrorKind::config, "at least one CMC rank required");
    for (std::size_t i = 0; i < cmc_ranks.size(); ++i) {
        if (cmc_ranks[i] < 1 || (i > 0 && cmc_ranks[i] <= cmc_ranks[i - 1])) {
            throw Error(ErrorKind::config, "CMC ranks must be ascending and >= 1");
        }
    }
}

RankedGallery rank_gallery(std::span<const double> query, const FeatureSet& gallery, const EvalProtocol& protocol,
                           std::uint64_t query_vehicle, std::uint32_t query_camera) {
    if (query.size() != gallery.dim()) {
        throw Error(ErrorKind::shape, "query dimension " + std::to_string(query.size()) +
                                          " does not match gallery dimension " + std::to_string(gallery.dim()));
    }
    const std::vector<double> q = protocol.l2_normalize ? normalized(query) : std::vector<double>(query.begin(), query.end());
    RankedGallery ranked;
    ranked.valid.assign(gallery.size(), true);
    std::vector<double> dist(gallery.size(), 0.0);
    for (std::size_t j = 0; j < gallery.size(); ++j) {
        if (protocol.exclude_same_camera && gallery.vehicle_ids[j] == query_vehicle &&
            gallery.camera_ids[j] == query_camera) {
            ranked.valid[j] = false;
            continue;
        }
        ranked.order.push_back(j);
        const auto row = gallery.features.row(j);
        dist[j] = protocol.l2_normalize ? distance_between(q, normalized(row), protocol.distance)
                                        : distance_between(q, row, protocol.distance);
    }
    std::stable_sort(ranked.order.begin(), ranked.order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    ranked.distances.reserve(ranked.order.size());
    for (std::size_t j : ranked.order) ranked.distances.push_back(dist[j]);
    return ranked;
}

std::optional<double> average_precision(const std::vector<bool>& ranked_relevance) {
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
        if (!ranked_relevance[k]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    if (hits == 0) return std::nullopt;
    return sum / static_cast<double>(hits);
}

std::vector<double> cmc_curve(const std::vector<std::vector<bool>>& ranked_relevance, std::size_t max_rank) {
    if (max_rank == 0) throw Error(ErrorKind::config, "CMC max rank must be >= 1");
    std::vector<double> hits_at(max_rank, 0.0);
    std::size_t counted = 0;
    for (const auto& rel : ranked_relevance) {
        const auto first = std::find(rel.begin(), rel.end(), true);
        if (first == rel.end()) continue;
        ++counted;
        const auto pos = static_cast<std::size_t>(first - rel.begin());
        if (pos < max_rank) hits_at[pos] += 1.0;
    }
    std::vector<double> cmc(max_rank, 0.0);
    if (counted == 0) return cmc;
    double running = 0.0;
    for (std::size_t r = 0; r < max_rank; ++r) {
        running += hits_at[r];
        cmc[r] = running / static_cast<double>(counted);
    }
    return cmc;
}

double EvalReport::rank(std::size_t r) const {
    for (const auto& [rank, acc] : cmc) {
        if (rank == r) return acc;
    }
    if (r >= 1 && r <= cmc_full.size()) return cmc_full[r - 1];
    throw Error(ErrorKind::config, "rank " + std::to_string(r) + " not in report");
}

EvalReport evaluate(const FeatureSet& queries, const FeatureSet& gallery, const EvalProtocol& protocol, Exec exec) {
    protocol.validate();
    queries.validate();
    gallery.validate();
    if (queries.dim() != gallery.dim()) {
        throw Error(ErrorKind::shape, "query dimension " + std::to_string(queries.dim()) +
                                          " does not match gallery dimension " + std::to_string(gallery.dim()));
    }

    std::vector<QueryResult> results(queries.size());
    auto run_query = [&](std::size_t i) {
        const RankedGallery ranked =
            rank_gallery(queries.features.row(i), gallery, protocol, queries.vehicle_ids[i], queries.camera_ids[i]);
        auto& r = results[i];
        r.relevance.reserve(ranked.order.size());
        for (std::size_t j : ranked.order) r.relevance.push_back(gallery.vehicle_ids[j] == queries.vehicle_ids[i]);
        r.ap = average_precision(r.relevance);
    };
    if (exec == Exec::parallel) {
        const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) run_query(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < queries.size(); ++i) run_query(i);
    }

    EvalReport report;
    std::vector<double> aps;
    std::vector<std::vector<bool>> relevance;
    for (auto& r : results) {
        report.per_query_ap.push_back(r.ap);
        if (r.ap) {
            aps.push_back(*r.ap);
        } else {
            ++report.skipped_queries;
        }
        relevance.push_back(std::move(r.relevance));
    }
    if (aps.empty()) throw Error(ErrorKind::empty_evaluation, "no query has a valid gallery match");
    report.mAP = kernels::pairwise_sum(aps) / static_cast<double>(aps.size());
    const std::size_t max_rank = std::max<std::size_t>(protocol.cmc_ranks.back(), 50);
    report.cmc_full = cmc_curve(relevance, max_rank);
    for (std::size_t r : protocol.cmc_ranks) report.cmc.emplace_back(r, report.cmc_full[r - 1]);
    return report;
}

}  // namespace arreid
