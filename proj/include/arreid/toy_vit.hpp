#pragma once

// Desk-scale pre-norm transformer encoder over strided patches. Produces a
// class-token feature for ranking plus identity logits for the ID loss, and
// trains with analytic gradients (no autodiff dependency).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "arreid/image.hpp"
#include "arreid/kernels.hpp"
#include "arreid/losses.hpp"
#include "arreid/matrix.hpp"
#include "arreid/patch_geometry.hpp"
#include "arreid/patch_mixup.hpp"

namespace arreid {

struct ToyViTConfig {
    PatchSpec patch_spec{16, 16, 16, 16};
    // When nonzero, the stride along the shorter side of a non-square input
    // is replaced by this value (uneven stride).
    std::size_t short_side_stride = 0;
    std::size_t embed_dim = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    double mlp_ratio = 2.0;
    std::uint64_t seed = 0;

    void validate() const;
    PatchSpec spec_for(const ImageShape& input) const;
    std::size_t hidden_dim() const;

    friend bool operator==(const ToyViTConfig&, const ToyViTConfig&) = default;
};

struct TrainConfig {
    std::size_t steps = 200;
    double lr = 0.01;
    double momentum = 0.1;
    double weight_decay = 1e-4;
    // Global L2 bound on the step gradient; 0 disables clipping.
    double grad_clip = 1.0;
    std::size_t P = 4;
    std::size_t K = 4;
    bool use_mixup = false;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TensorSlot {
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const { return rows * cols; }
};

struct LayerSlots {
    TensorSlot ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct ParamLayout {
    TensorSlot proj_w, proj_b, cls, pos;
    std::vector<LayerSlots> layers;
    TensorSlot lnf_g, lnf_b, head;
    std::size_t total = 0;

    static ParamLayout build(const ToyViTConfig& config, std::size_t patches, std::size_t patch_pixels,
                             std::size_t num_classes);
};

struct ModelParams {
    ToyViTConfig config;
    ImageShape input_shape;
    std::size_t channels = 3;
    double model_ar = 1.0;
    std::vector<std::uint64_t> class_labels;  // class index → vehicle id
    PatchGrid grid;
    ParamLayout layout;
    std::vector<double> values;

    ConstMatrixView tensor(const TensorSlot& s) const { return {values.data() + s.offset, s.rows, s.cols}; }
    std::size_t num_classes() const { return class_labels.size(); }
    std::size_t patch_pixels() const { return grid.spec.patch_h * grid.spec.patch_w * channels; }
};

std::size_t parameter_count(const ToyViTConfig& config, const ImageShape& input, std::size_t channels,
                            std::size_t num_classes);

// Truncated-normal (std 0.02) weights, zero biases, unit layer-norm gains.
ModelParams init_params(const ToyViTConfig& config, const ImageShape& input, std::vector<std::uint64_t> class_labels,
                        std::size_t channels = 3, std::optional<double> model_ar = std::nullopt);

// Row c = flattened pixels of grid patch c, row-major, channel-last.
Matrix extract_patches(const Image& image, const PatchSpec& spec);

// Class-token feature of the final layer (embed_dim values).
std::vector<double> forward(const ModelParams& params, const Image& image);

// Features for many images, one row each.
Matrix embed(const ModelParams& params, std::span<const Image> images, Exec exec = Exec::parallel);

struct BatchLoss {
    double id = 0.0;
    double triplet = 0.0;
    double total = 0.0;
};

// Overall loss of a P×K batch; when `gradient` is non-null it receives
// d loss / d params (same layout as params.values).
BatchLoss loss_and_gradient(const ModelParams& params, std::span<const Image> images,
                            std::span<const std::uint64_t> labels, std::vector<double>* gradient,
                            Exec exec = Exec::parallel);

// Loss over the full parameter vector on a fixed batch, for gradient checks.
DifferentiableFunction model_objective(const ModelParams& params, std::vector<Image> images,
                                       std::vector<std::uint64_t> labels);

struct LabeledImages {
    std::vector<Image> images;
    std::vector<std::uint64_t> labels;
};

struct TrainTrace {
    std::vector<double> total;
    std::vector<double> id;
    std::vector<double> triplet;
};

// Samples P identities × K instances per step, optionally applies patch
// mixup, and takes one SGD step (momentum, weight decay) on the overall loss.
TrainTrace train_steps(ModelParams& params, const LabeledImages& data, const TrainConfig& train,
                       const MixupConfig* mixup = nullptr, Exec exec = Exec::parallel);

}  // namespace arreid
