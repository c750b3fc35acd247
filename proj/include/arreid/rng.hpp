#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace arreid {

// Seeded generator with deterministic stream splitting: split(seed, i) gives
// every image / sample / step its own stream, so the result of a batched
// operation does not depend on the order (or thread) it was computed in.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    static Rng split(std::uint64_t seed, std::uint64_t stream);

    std::mt19937_64& engine() { return engine_; }

    double uniform(double lo = 0.0, double hi = 1.0);
    // Uniform integer in [0, n).
    std::size_t below(std::size_t n);
    double normal(double mean = 0.0, double stddev = 1.0);
    // Normal truncated (by resampling) to mean ± 2·stddev.
    double truncated_normal(double stddev);

    // k distinct indices from [0, n), uniformly, in selection order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);
    // Uniform random permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n);

    static std::uint64_t mix(std::uint64_t x);

private:
    std::mt19937_64 engine_;
};

}  // namespace arreid
