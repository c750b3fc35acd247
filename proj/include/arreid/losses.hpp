#pragma once

// Training objective: identity cross-entropy, soft-margin batch-hard triplet
// loss, their unweighted sum, analytic gradients for both, and a central
// finite-difference checker.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arreid/kernels.hpp"
#include "arreid/matrix.hpp"

namespace arreid {

struct LogitBatch {
    Matrix logits;                    // N × C
    std::vector<std::size_t> labels;  // N class indices

    void validate() const;
};

// P identities × K instances; label order within the batch is free.
struct EmbeddingBatch {
    Matrix features;                    // (P·K) × d
    std::vector<std::uint64_t> labels;
    std::size_t P = 0;
    std::size_t K = 0;

    // Infers P and K, and throws Error(shape) unless every label occurs
    // equally often, or Error(degenerate_batch) when P < 2 or K < 2.
    static EmbeddingBatch make(Matrix features, std::vector<std::uint64_t> labels);
};

Matrix squared_euclidean_matrix(const Matrix& features, Exec exec = Exec::parallel);

// max(z, 0) + log1p(exp(-|z|))
double softplus(double z);
double sigmoid(double z);

double id_loss(const LogitBatch& batch);
// d id_loss / d logits
Matrix id_loss_gradient(const LogitBatch& batch);

struct HardTriplets {
    std::vector<std::size_t> positive;  // farthest same-label sample, anchor excluded
    std::vector<std::size_t> negative;  // nearest other-label sample
    // Smallest gap between the selected distance and the runner-up, over
    // both selections; tiny values mean the loss sits on a kink.
    std::vector<double> gap;
};

HardTriplets select_hard_triplets(const Matrix& distances, std::span<const std::uint64_t> labels);

double triplet_loss(const EmbeddingBatch& batch);
// d triplet_loss / d features, through the hardest-positive / hardest-negative selection.
Matrix triplet_loss_gradient(const EmbeddingBatch& batch);

inline double overall_loss(double id, double triplet) { return id + triplet; }

struct DifferentiableFunction {
    std::function<double(std::span<const double>)> value;
    std::function<std::vector<double>(std::span<const double>)> gradient;
    // Optional: true when the two probe points straddle (or touch) a
    // non-differentiable point, making the central difference meaningless.
    std::function<bool(std::span<const double>, std::span<const double>)> straddles_kink;
};

struct GradientCheckReport {
    double max_relative_error = 0.0;
    bool passed = true;
    std::size_t checked = 0;
    std::vector<std::size_t> skipped;
    std::vector<std::string> warnings;
};

// Relative error per coordinate is |g_fd − g| / max(1, |g_fd|, |g|). An empty
// `coordinates` span checks every coordinate.
GradientCheckReport finite_difference_check(const DifferentiableFunction& fn, std::span<const double> params,
                                            double epsilon, double tolerance,
                                            std::span<const std::size_t> coordinates = {});

// Losses as functions of a flattened matrix, for gradient checking.
DifferentiableFunction id_loss_objective(std::vector<std::size_t> labels, std::size_t classes);
DifferentiableFunction triplet_loss_objective(std::vector<std::uint64_t> labels, std::size_t dim);

}  // namespace arreid
