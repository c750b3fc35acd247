#include <doctest.h>

#include <cmath>

#include "arreid/error.hpp"
#include "arreid/reid_eval.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace arreid;
using arreid::testing::random_matrix;

namespace {

FeatureSet random_set(Rng& rng, std::size_t n, std::size_t dim, std::size_t ids, std::size_t cams) {
    FeatureSet s{random_matrix(rng, n, dim), {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        s.vehicle_ids.push_back(rng.below(ids));
        s.camera_ids.push_back(static_cast<std::uint32_t>(rng.below(cams)));
    }
    return s;
}

void check_against_oracle(const FeatureSet& q, const FeatureSet& g, const EvalProtocol& p) {
    const std::size_t max_rank = p.cmc_ranks.back();
    const auto naive = oracle::naive_metrics(q.features, q.vehicle_ids, q.camera_ids, g.features, g.vehicle_ids,
                                             g.camera_ids, p.distance == Distance::cosine, p.exclude_same_camera,
                                             max_rank, p.l2_normalize);
    const EvalReport report = evaluate(q, g, p);
    CHECK(std::abs(report.mAP - naive.mAP) < 1e-9);
    for (const auto& [rank, acc] : report.cmc) CHECK(std::abs(acc - naive.cmc[rank - 1]) < 1e-9);
    CHECK(report.skipped_queries == q.size() - naive.valid_queries);
}

}  // namespace

TEST_CASE("ranking hand cases") {
    FeatureSet g{Matrix(3, 3, std::vector<double>{0, 1, 0, 1, 0, 0, 0, 0, 1}), {1, 2, 3}, {0, 0, 0}};
    EvalProtocol p;
    p.exclude_same_camera = false;
    const std::vector<double> q{1, 0, 0};
    auto r = rank_gallery(q, g, p, 0, 5);
    CHECK(r.order.front() == 1);
    CHECK(std::abs(r.distances.front()) < 1e-15);

    // orthogonal: all distances 1, index order
    FeatureSet o{Matrix(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}), {1, 2, 3}, {0, 0, 0}};
    r = rank_gallery(std::vector<double>{1, 1, 1}, o, p, 0, 0);
    CHECK(r.order == std::vector<std::size_t>{0, 1, 2});
    FeatureSet orth{Matrix(2, 3, std::vector<double>{0, 1, 0, 0, 0, 1}), {1, 2}, {0, 0}};
    r = rank_gallery(std::vector<double>{1, 0, 0}, orth, p, 0, 0);
    CHECK(r.order == std::vector<std::size_t>{0, 1});
    CHECK(r.distances == std::vector<double>{1.0, 1.0});

    // same vehicle + same camera is masked when asked
    p.exclude_same_camera = true;
    r = rank_gallery(q, g, p, 2, 0);
    CHECK(r.valid == std::vector<bool>{true, false, true});
    CHECK(r.order.size() == 2);
}

TEST_CASE("ranking matches a brute-force sort") {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        const FeatureSet g = random_set(rng, 10, 4, 3, 2);
        std::vector<double> q(4);
        for (auto& v : q) v = rng.normal();
        for (Distance d : {Distance::cosine, Distance::squared_euclidean}) {
            EvalProtocol p;
            p.distance = d;
            p.exclude_same_camera = false;
            p.l2_normalize = false;
            const auto r = rank_gallery(q, g, p, 0, 0);
            std::vector<std::pair<double, std::size_t>> brute;
            for (std::size_t j = 0; j < 10; ++j) {
                double dist = 0.0;
                if (d == Distance::cosine) {
                    double dot = 0, qq = 0, gg = 0;
                    for (std::size_t k = 0; k < 4; ++k)
                        dot += q[k] * g.features(j, k), qq += q[k] * q[k], gg += g.features(j, k) * g.features(j, k);
                    dist = 1 - dot / std::sqrt(qq * gg);
                } else {
                    for (std::size_t k = 0; k < 4; ++k) dist += (q[k] - g.features(j, k)) * (q[k] - g.features(j, k));
                }
                brute.push_back({dist, j});
            }
            std::sort(brute.begin(), brute.end());
            for (std::size_t j = 0; j < 10; ++j) CHECK(r.order[j] == brute[j].second);
        }
    }
}

TEST_CASE("average precision and cmc hand cases") {
    CHECK(average_precision({true}) == 1.0);
    CHECK(average_precision({true, false, true}) == (1.0 + 2.0 / 3.0) / 2.0);
    CHECK(std::abs(*average_precision({true, false, true}) - 0.833333) < 1e-6);
    CHECK(average_precision({false, true}) == 0.5);
    CHECK_FALSE(average_precision({false, false}).has_value());

    CHECK(cmc_curve({{true, false, false}, {false, false, true}}, 3) == std::vector<double>{0.5, 0.5, 1.0});
    CHECK(cmc_curve({{true, false}, {true}}, 2)[0] == 1.0);
    // queries without any match are skipped
    CHECK(cmc_curve({{true}, {false, false}}, 2) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("self retrieval") {
    Rng rng(2);
    FeatureSet s = random_set(rng, 12, 6, 12, 1);
    for (std::size_t i = 0; i < 12; ++i) s.vehicle_ids[i] = i;
    EvalProtocol p;
    p.exclude_same_camera = false;
    const auto r = evaluate(s, s, p);
    CHECK(r.mAP == 1.0);
    CHECK(r.rank(1) == 1.0);
}

TEST_CASE("3 identities x 2 views with known distances") {
    // Two views per id, placed on a line so every distance is known.
    FeatureSet q{Matrix(3, 1, std::vector<double>{0.0, 10.0, 20.0}), {0, 1, 2}, {0, 0, 0}};
    FeatureSet g{Matrix(3, 1, std::vector<double>{11.0, 1.0, 40.0}), {0, 1, 2}, {1, 1, 1}};
    EvalProtocol p;
    p.distance = Distance::squared_euclidean;
    p.l2_normalize = false;
    p.cmc_ranks = {1, 2, 3};
    const auto r = evaluate(q, g, p);
    // q0: [g1(1), g0(121), g2(1600)] → hit at rank 2
    // q1: [g0(1), g1(81), g2(900)]   → hit at rank 2
    // q2: [g0(81), g1(361), g2(400)] → hit at rank 3
    CHECK(r.mAP == doctest::Approx((0.5 + 0.5 + 1.0 / 3.0) / 3.0).epsilon(1e-15));
    CHECK(r.rank(1) == 0.0);
    CHECK(r.rank(2) == doctest::Approx(2.0 / 3.0));
    CHECK(r.rank(3) == 1.0);
    check_against_oracle(q, g, p);
}

TEST_CASE("evaluate matches the naive oracle on random instances") {
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        const std::size_t ids = 2 + rng.below(8);
        const FeatureSet q = random_set(rng, 1 + rng.below(20), 8, ids, 3);
        const FeatureSet g = random_set(rng, 5 + rng.below(50), 8, ids, 3);
        EvalProtocol p;
        p.distance = t % 2 ? Distance::cosine : Distance::squared_euclidean;
        p.exclude_same_camera = t % 3 != 0;
        try {
            check_against_oracle(q, g, p);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::empty_evaluation);
        }
    }
}

TEST_CASE("metric invariances") {
    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
        const FeatureSet q = random_set(rng, 10, 5, 4, 2);
        const FeatureSet g = random_set(rng, 30, 5, 4, 2);
        const EvalProtocol p;
        const EvalReport base = evaluate(q, g, p);

        // Common gallery permutation: tie-breaking aside, metrics are unchanged.
        const auto perm = rng.permutation(g.size());
        FeatureSet gp{Matrix(g.size(), 5), {}, {}};
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::copy(g.features.row(perm[i]).begin(), g.features.row(perm[i]).end(), gp.features.row(i).begin());
            gp.vehicle_ids.push_back(g.vehicle_ids[perm[i]]);
            gp.camera_ids.push_back(g.camera_ids[perm[i]]);
        }
        const EvalReport permuted = evaluate(q, gp, p);
        CHECK(std::abs(permuted.mAP - base.mAP) < 1e-12);
        CHECK(permuted.cmc == base.cmc);

        // Positive scaling and an orthogonal transform (rotation in one plane plus a sign flip).
        FeatureSet qs = q, gs = g;
        for (auto& v : qs.features.values()) v *= 3.7;
        for (auto& v : gs.features.values()) v *= 3.7;
        CHECK(std::abs(evaluate(qs, gs, p).mAP - base.mAP) < 1e-12);

        const double th = rng.uniform(0, 6.28), c = std::cos(th), s = std::sin(th);
        auto rotate = [&](FeatureSet set) {
            for (std::size_t i = 0; i < set.size(); ++i) {
                auto r = set.features.row(i);
                const double a = r[0], b = r[1];
                r[0] = c * a - s * b;
                r[1] = s * a + c * b;
                r[4] = -r[4];
            }
            return set;
        };
        for (Distance d : {Distance::cosine, Distance::squared_euclidean}) {
            EvalProtocol pd;
            pd.distance = d;
            const EvalReport before = evaluate(q, g, pd);
            const EvalReport after = evaluate(rotate(q), rotate(g), pd);
            CHECK(std::abs(after.mAP - before.mAP) < 1e-9);
        }

        // CMC bounds
        std::size_t perfect = 0, counted = 0;
        for (const auto& ap : base.per_query_ap)
            if (ap) ++counted, perfect += *ap == 1.0;
        for (double c1 : base.cmc_full) CHECK(c1 >= double(perfect) / double(counted) - 1e-15);
        CHECK(base.rank(1) <= base.rank(5));
        CHECK(base.rank(5) <= base.rank(10));
        for (std::size_t r = 1; r < base.cmc_full.size(); ++r) CHECK(base.cmc_full[r] >= base.cmc_full[r - 1]);
    }
}

TEST_CASE("evaluation errors and parallel determinism") {
    Rng rng(5);
    const FeatureSet q = random_set(rng, 15, 4, 5, 2);
    const FeatureSet g = random_set(rng, 40, 4, 5, 2);
    const EvalReport a = evaluate(q, g, {}, Exec::serial);
    const EvalReport b = evaluate(q, g, {}, Exec::parallel);
    CHECK(a.mAP == b.mAP);
    CHECK(a.cmc_full == b.cmc_full);
    CHECK(a.cmc_full.size() == 50);

    FeatureSet none = g;
    for (auto& id : none.vehicle_ids) id += 1000;
    try {
        evaluate(q, none);
        FAIL("expected empty evaluation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_evaluation);
    }
    FeatureSet wrong{Matrix(2, 3), {1, 2}, {0, 0}};
    CHECK_THROWS_AS(evaluate(q, wrong), Error);
    EvalProtocol bad;
    bad.cmc_ranks = {5, 1};
    CHECK_THROWS_AS(evaluate(q, g, bad), Error);
}
