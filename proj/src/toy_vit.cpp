#include "arreid/toy_vit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <numbers>

#include "arreid/error.hpp"
#include "arreid/rng.hpp"

namespace arreid {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kInitStd = 0.02;

MatrixView slot_view(std::vector<double>& values, const TensorSlot& s) {
    return {values.data() + s.offset, s.rows, s.cols};
}

struct NormCache {
    Matrix xhat;
    std::vector<double> rstd;
};

struct LayerCache {
    Matrix x_in, ln1, qkv, attn, ctx, x_mid, ln2, pre, act;
    NormCache norm1, norm2;
};

struct ForwardCache {
    Matrix patches;
    std::vector<LayerCache> layers;
    Matrix x_out;
    NormCache normf;
    std::vector<double> feature;
};

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

// y = g ⊙ x̂ + b per row.
void layer_norm_rows(ConstMatrixView x, ConstMatrixView g, ConstMatrixView b, Matrix& out, NormCache& cache) {
    out = Matrix(x.rows, x.cols);
    cache.xhat = Matrix(x.rows, x.cols);
    cache.rstd.assign(x.rows, 0.0);
    const double inv_d = 1.0 / static_cast<double>(x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto row = x.row(i);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean *= inv_d;
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var *= inv_d;
        const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.rstd[i] = rstd;
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double xhat = (row[k] - mean) * rstd;
            cache.xhat(i, k) = xhat;
            out(i, k) = xhat * g.data[k] + b.data[k];
        }
    }
}

void layer_norm_backward(const NormCache& cache, ConstMatrixView g, const Matrix& dy, MatrixView dg, MatrixView db,
                         Matrix& dx) {
    const std::size_t d = dy.cols();
    const double inv_d = 1.0 / static_cast<double>(d);
    dx = Matrix(dy.rows(), d);
    std::vector<double> dxhat(d);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double xhat = cache.xhat(i, k);
            dxhat[k] = dy(i, k) * g.data[k];
            dg.data[k] += dy(i, k) * xhat;
            db.data[k] += dy(i, k);
            mean_dxhat += dxhat[k];
            mean_dxhat_xhat += dxhat[k] * xhat;
        }
        mean_dxhat *= inv_d;
        mean_dxhat_xhat *= inv_d;
        for (std::size_t k = 0; k < d; ++k) {
            dx(i, k) = cache.rstd[i] * (dxhat[k] - mean_dxhat - cache.xhat(i, k) * mean_dxhat_xhat);
        }
    }
}

void add_bias(Matrix& m, ConstMatrixView bias) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) += bias.data[k];
    }
}

void add_column_sums(const Matrix& m, MatrixView out) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = 0; k < m.cols(); ++k) out.data[k] += m(i, k);
    }
}

void check_input(const ModelParams& params, const Image& image) {
    if (image.shape() != params.input_shape || image.channels() != params.channels) {
        throw Error(ErrorKind::shape, "image " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                                          "x" + std::to_string(image.channels()) + " does not match model input " +
                                          std::to_string(params.input_shape.height) + "x" +
                                          std::to_string(params.input_shape.width) + "x" +
                                          std::to_string(params.channels));
    }
}

ForwardCache run_forward(const ModelParams& p, const Image& image) {
    check_input(p, image);
    const auto& L = p.layout;
    const std::size_t d = p.config.embed_dim;
    const std::size_t n = p.grid.n;
    const std::size_t T = n + 1;
    const std::size_t heads = p.config.heads;
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    ForwardCache cache;
    cache.patches = extract_patches(image, p.grid.spec);
    Matrix embedded(n, d);
    kernels::serial::gemm(cache.patches, p.tensor(L.proj_w), embedded.view(), false);
    add_bias(embedded, p.tensor(L.proj_b));

    Matrix x(T, d);
    const auto cls = p.tensor(L.cls);
    const auto pos = p.tensor(L.pos);
    for (std::size_t k = 0; k < d; ++k) x(0, k) = cls.data[k] + pos(0, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) x(i + 1, k) = embedded(i, k) + pos(i + 1, k);
    }

    cache.layers.resize(L.layers.size());
    for (std::size_t l = 0; l < L.layers.size(); ++l) {
        const auto& S = L.layers[l];
        auto& c = cache.layers[l];
        c.x_in = x;
        layer_norm_rows(c.x_in, p.tensor(S.ln1_g), p.tensor(S.ln1_b), c.ln1, c.norm1);
        c.qkv = Matrix(T, 3 * d);
        kernels::serial::gemm(c.ln1, p.tensor(S.wqkv), c.qkv.view(), false);
        add_bias(c.qkv, p.tensor(S.bqkv));

        c.attn = Matrix(heads * T, T);
        c.ctx = Matrix(T, d);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t qo = h * dh, ko = d + h * dh, vo = 2 * d + h * dh;
            for (std::size_t i = 0; i < T; ++i) {
                auto a = c.attn.row(h * T + i);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < T; ++j) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < dh; ++k) s += c.qkv(i, qo + k) * c.qkv(j, ko + k);
                    a[j] = s * scale;
                    mx = std::max(mx, a[j]);
                }
                double z = 0.0;
                for (auto& v : a) {
                    v = std::exp(v - mx);
                    z += v;
                }
                for (auto& v : a) v /= z;
                for (std::size_t j = 0; j < T; ++j) {
                    const double w = a[j];
                    for (std::size_t k = 0; k < dh; ++k) c.ctx(i, qo + k) += w * c.qkv(j, vo + k);
                }
            }
        }

        c.x_mid = c.x_in;
        kernels::serial::gemm(c.ctx, p.tensor(S.wo), c.x_mid.view(), true);
        add_bias(c.x_mid, p.tensor(S.bo));

        layer_norm_rows(c.x_mid, p.tensor(S.ln2_g), p.tensor(S.ln2_b), c.ln2, c.norm2);
        c.pre = Matrix(T, S.w1.cols);
        kernels::serial::gemm(c.ln2, p.tensor(S.w1), c.pre.view(), false);
        add_bias(c.pre, p.tensor(S.b1));
        c.act = Matrix(T, S.w1.cols);
        for (std::size_t i = 0; i < c.pre.values().size(); ++i) c.act.values()[i] = gelu(c.pre.values()[i]);

        x = c.x_mid;
        kernels::serial::gemm(c.act, p.tensor(S.w2), x.view(), true);
        add_bias(x, p.tensor(S.b2));
    }
    cache.x_out = x;

    // Final norm on the class-token row only; it is the feature.
    Matrix cls_row(1, d, std::vector<double>(x.row(0).begin(), x.row(0).end()));
    Matrix normed;
    layer_norm_rows(cls_row, p.tensor(L.lnf_g), p.tensor(L.lnf_b), normed, cache.normf);
    cache.feature.assign(normed.row(0).begin(), normed.row(0).end());
    return cache;
}

// Accumulates d loss / d params into `grad` given d loss / d feature.
void run_backward(const ModelParams& p, const ForwardCache& cache, std::span<const double> dfeature,
                  std::vector<double>& grad) {
    const auto& L = p.layout;
    const std::size_t d = p.config.embed_dim;
    const std::size_t n = p.grid.n;
    const std::size_t T = n + 1;
    const std::size_t heads = p.config.heads;
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix dx(T, d);
    {
        Matrix dy(1, d, std::vector<double>(dfeature.begin(), dfeature.end()));
        Matrix dcls;
        layer_norm_backward(cache.normf, p.tensor(L.lnf_g), dy, slot_view(grad, L.lnf_g), slot_view(grad, L.lnf_b),
                            dcls);
        for (std::size_t k = 0; k < d; ++k) dx(0, k) = dcls(0, k);
    }

    for (std::size_t l = L.layers.size(); l-- > 0;) {
        const auto& S = L.layers[l];
        const auto& c = cache.layers[l];
        const std::size_t hidden = S.w1.cols;

        // MLP branch: x_out = x_mid + gelu(ln2 W1 + b1) W2 + b2
        Matrix d_act(T, hidden);
        kernels::serial::gemm_nt(dx, p.tensor(S.w2), d_act.view(), false);
        kernels::serial::gemm_tn(c.act, dx, slot_view(grad, S.w2), true);
        add_column_sums(dx, slot_view(grad, S.b2));
        for (std::size_t i = 0; i < d_act.values().size(); ++i) d_act.values()[i] *= gelu_grad(c.pre.values()[i]);
        kernels::serial::gemm_tn(c.ln2, d_act, slot_view(grad, S.w1), true);
        add_column_sums(d_act, slot_view(grad, S.b1));
        Matrix d_ln2(T, d);
        kernels::serial::gemm_nt(d_act, p.tensor(S.w1), d_ln2.view(), false);
        Matrix d_mid_norm;
        layer_norm_backward(c.norm2, p.tensor(S.ln2_g), d_ln2, slot_view(grad, S.ln2_g), slot_view(grad, S.ln2_b),
                            d_mid_norm);
        Matrix d_mid = dx;
        for (std::size_t i = 0; i < d_mid.values().size(); ++i) d_mid.values()[i] += d_mid_norm.values()[i];

        // Attention branch: x_mid = x_in + ctx Wo + bo
        Matrix d_ctx(T, d);
        kernels::serial::gemm_nt(d_mid, p.tensor(S.wo), d_ctx.view(), false);
        kernels::serial::gemm_tn(c.ctx, d_mid, slot_view(grad, S.wo), true);
        add_column_sums(d_mid, slot_view(grad, S.bo));

        Matrix d_qkv(T, 3 * d);
        std::vector<double> d_attn(T);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t qo = h * dh, ko = d + h * dh, vo = 2 * d + h * dh;
            for (std::size_t i = 0; i < T; ++i) {
                const auto a = c.attn.row(h * T + i);
                double dot = 0.0;
                for (std::size_t j = 0; j < T; ++j) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < dh; ++k) s += d_ctx(i, qo + k) * c.qkv(j, vo + k);
                    d_attn[j] = s;
                    dot += s * a[j];
                    for (std::size_t k = 0; k < dh; ++k) d_qkv(j, vo + k) += a[j] * d_ctx(i, qo + k);
                }
                for (std::size_t j = 0; j < T; ++j) {
                    const double ds = a[j] * (d_attn[j] - dot) * scale;
                    if (ds == 0.0) continue;
                    for (std::size_t k = 0; k < dh; ++k) {
                        d_qkv(i, qo + k) += ds * c.qkv(j, ko + k);
                        d_qkv(j, ko + k) += ds * c.qkv(i, qo + k);
                    }
                }
            }
        }
        kernels::serial::gemm_tn(c.ln1, d_qkv, slot_view(grad, S.wqkv), true);
        add_column_sums(d_qkv, slot_view(grad, S.bqkv));
        Matrix d_ln1(T, d);
        kernels::serial::gemm_nt(d_qkv, p.tensor(S.wqkv), d_ln1.view(), false);
        Matrix d_in_norm;
        layer_norm_backward(c.norm1, p.tensor(S.ln1_g), d_ln1, slot_view(grad, S.ln1_g), slot_view(grad, S.ln1_b),
                            d_in_norm);
        dx = d_mid;
        for (std::size_t i = 0; i < dx.values().size(); ++i) dx.values()[i] += d_in_norm.values()[i];
    }

    auto dpos = slot_view(grad, L.pos);
    for (std::size_t i = 0; i < dx.values().size(); ++i) dpos.data[i] += dx.values()[i];
    auto dcls = slot_view(grad, L.cls);
    for (std::size_t k = 0; k < d; ++k) dcls.data[k] += dx(0, k);
    const ConstMatrixView d_embedded{dx.values().data() + d, n, d};
    kernels::serial::gemm_tn(cache.patches, d_embedded, slot_view(grad, L.proj_w), true);
    auto dproj_b = slot_view(grad, L.proj_b);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) dproj_b.data[k] += d_embedded(i, k);
    }
}

template <typename Fn>
void for_each_index(Exec exec, std::size_t count, Fn&& fn) {
    if (exec == Exec::parallel) {
        std::exception_ptr failure;
        const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < count; ++i) fn(i);
    }
}

std::vector<std::size_t> class_indices(const ModelParams& p, std::span<const std::uint64_t> labels) {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (auto y : labels) {
        const auto it = std::lower_bound(p.class_labels.begin(), p.class_labels.end(), y);
        if (it == p.class_labels.end() || *it != y) {
            throw Error(ErrorKind::shape, "label " + std::to_string(y) + " is not a class of this model");
        }
        out.push_back(static_cast<std::size_t>(it - p.class_labels.begin()));
    }
    return out;
}

}  // namespace

void ToyViTConfig::validate() const {
    if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
        throw Error(ErrorKind::config, "embed_dim must be a positive multiple of heads");
    }
    if (layers == 0) throw Error(ErrorKind::config, "at least one encoder layer required");
    if (!(mlp_ratio > 0.0)) throw Error(ErrorKind::config, "mlp_ratio must be positive");
    if (patch_spec.patch_h == 0 || patch_spec.patch_w == 0 || patch_spec.stride_h == 0 || patch_spec.stride_w == 0) {
        throw Error(ErrorKind::config, "patch sizes and strides must be positive");
    }
}

PatchSpec ToyViTConfig::spec_for(const ImageShape& input) const {
    PatchSpec spec = patch_spec;
    if (short_side_stride > 0) {
        if (input.height < input.width) spec.stride_h = short_side_stride;
        if (input.width < input.height) spec.stride_w = short_side_stride;
    }
    return spec;
}

std::size_t ToyViTConfig::hidden_dim() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(embed_dim))));
}

void TrainConfig::validate() const {
    if (P < 2 || K < 2) throw Error(ErrorKind::config, "training batches need P >= 2 and K >= 2");
    if (!(lr >= 0.0) || !(momentum >= 0.0) || !(weight_decay >= 0.0) || !(grad_clip >= 0.0)) {
        throw Error(ErrorKind::config, "lr, momentum, weight_decay and grad_clip must be non-negative");
    }
}

ParamLayout ParamLayout::build(const ToyViTConfig& config, std::size_t patches, std::size_t patch_pixels,
                               std::size_t num_classes) {
    ParamLayout L;
    std::size_t offset = 0;
    auto take = [&offset](std::size_t rows, std::size_t cols) {
        TensorSlot s{offset, rows, cols};
        offset += rows * cols;
        return s;
    };
    const std::size_t d = config.embed_dim;
    const std::size_t hidden = config.hidden_dim();
    L.proj_w = take(patch_pixels, d);
    L.proj_b = take(1, d);
    L.cls = take(1, d);
    L.pos = take(patches + 1, d);
    for (std::size_t l = 0; l < config.layers; ++l) {
        LayerSlots s;
        s.ln1_g = take(1, d);
        s.ln1_b = take(1, d);
        s.wqkv = take(d, 3 * d);
        s.bqkv = take(1, 3 * d);
        s.wo = take(d, d);
        s.bo = take(1, d);
        s.ln2_g = take(1, d);
        s.ln2_b = take(1, d);
        s.w1 = take(d, hidden);
        s.b1 = take(1, hidden);
        s.w2 = take(hidden, d);
        s.b2 = take(1, d);
        L.layers.push_back(s);
    }
    L.lnf_g = take(1, d);
    L.lnf_b = take(1, d);
    L.head = take(d, num_classes);
    L.total = offset;
    return L;
}

std::size_t parameter_count(const ToyViTConfig& config, const ImageShape& input, std::size_t channels,
                            std::size_t num_classes) {
    const PatchSpec spec = config.spec_for(input);
    const PatchGrid grid = compute_patch_grid(input, spec);
    return ParamLayout::build(config, grid.n, spec.patch_h * spec.patch_w * channels, num_classes).total;
}

ModelParams init_params(const ToyViTConfig& config, const ImageShape& input, std::vector<std::uint64_t> class_labels,
                        std::size_t channels, std::optional<double> model_ar) {
    config.validate();
    std::sort(class_labels.begin(), class_labels.end());
    class_labels.erase(std::unique(class_labels.begin(), class_labels.end()), class_labels.end());
    if (class_labels.empty()) throw Error(ErrorKind::degenerate_dataset, "model needs at least one class");

    ModelParams p;
    p.config = config;
    p.input_shape = input;
    p.channels = channels;
    p.model_ar = model_ar.value_or(input.aspect_ratio());
    p.class_labels = std::move(class_labels);
    p.grid = compute_patch_grid(input, config.spec_for(input));
    p.layout = ParamLayout::build(config, p.grid.n, p.patch_pixels(), p.num_classes());
    p.values.assign(p.layout.total, 0.0);

    Rng rng(config.seed);
    auto randomize = [&](const TensorSlot& s) {
        for (std::size_t i = 0; i < s.size(); ++i) p.values[s.offset + i] = rng.truncated_normal(kInitStd);
    };
    auto fill = [&](const TensorSlot& s, double v) {
        std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(s.offset), s.size(), v);
    };
    const auto& L = p.layout;
    randomize(L.proj_w);
    randomize(L.cls);
    randomize(L.pos);
    for (const auto& s : L.layers) {
        fill(s.ln1_g, 1.0);
        randomize(s.wqkv);
        randomize(s.wo);
        fill(s.ln2_g, 1.0);
        randomize(s.w1);
        randomize(s.w2);
    }
    fill(L.lnf_g, 1.0);
    randomize(L.head);
    return p;
}

Matrix extract_patches(const Image& image, const PatchSpec& spec) {
    const PatchGrid grid = compute_patch_grid(image.shape(), spec);
    const std::size_t ch = image.channels();
    Matrix out(grid.n, spec.patch_h * spec.patch_w * ch);
    for (std::size_t c = 0; c < grid.n; ++c) {
        const auto& pos = grid.positions[c];
        auto row = out.row(c);
        std::size_t idx = 0;
        for (std::size_t dy = 0; dy < spec.patch_h; ++dy) {
            const double* src = &image.pixels()[((pos.y + dy) * image.width() + pos.x) * ch];
            for (std::size_t k = 0; k < spec.patch_w * ch; ++k) row[idx++] = src[k];
        }
    }
    return out;
}

std::vector<double> forward(const ModelParams& params, const Image& image) {
    return run_forward(params, image).feature;
}

Matrix embed(const ModelParams& params, std::span<const Image> images, Exec exec) {
    Matrix out(images.size(), params.config.embed_dim);
    for_each_index(exec, images.size(), [&](std::size_t i) {
        const auto f = forward(params, images[i]);
        std::copy(f.begin(), f.end(), out.row(i).begin());
    });
    return out;
}

BatchLoss loss_and_gradient(const ModelParams& params, std::span<const Image> images,
                            std::span<const std::uint64_t> labels, std::vector<double>* gradient, Exec exec) {
    if (images.size() != labels.size()) throw Error(ErrorKind::shape, "one label per image required");
    const std::size_t N = images.size();
    const std::size_t d = params.config.embed_dim;
    const std::vector<std::size_t> classes = class_indices(params, labels);

    std::vector<ForwardCache> caches(N);
    for_each_index(exec, N, [&](std::size_t i) { caches[i] = run_forward(params, images[i]); });

    Matrix features(N, d);
    for (std::size_t i = 0; i < N; ++i) std::copy(caches[i].feature.begin(), caches[i].feature.end(), features.row(i).begin());
    const ConstMatrixView head = params.tensor(params.layout.head);
    LogitBatch logit_batch{Matrix(N, head.cols), classes};
    kernels::serial::gemm(features, head, logit_batch.logits.view(), false);
    const EmbeddingBatch embedding = EmbeddingBatch::make(features, std::vector<std::uint64_t>(labels.begin(), labels.end()));

    BatchLoss loss;
    loss.id = id_loss(logit_batch);
    loss.triplet = triplet_loss(embedding);
    loss.total = overall_loss(loss.id, loss.triplet);
    if (gradient == nullptr) return loss;

    const Matrix d_logits = id_loss_gradient(logit_batch);
    Matrix d_features = triplet_loss_gradient(embedding);
    kernels::serial::gemm_nt(d_logits, head, d_features.view(), true);

    gradient->assign(params.values.size(), 0.0);
    kernels::serial::gemm_tn(features, d_logits, slot_view(*gradient, params.layout.head), true);

    std::vector<std::vector<double>> per_sample(N);
    for_each_index(exec, N, [&](std::size_t i) {
        per_sample[i].assign(params.values.size(), 0.0);
        run_backward(params, caches[i], d_features.row(i), per_sample[i]);
    });
    // Fixed-order reduction keeps the gradient independent of thread count.
    for (const auto& g : per_sample) {
        for (std::size_t k = 0; k < g.size(); ++k) (*gradient)[k] += g[k];
    }
    return loss;
}

DifferentiableFunction model_objective(const ModelParams& params, std::vector<Image> images,
                                       std::vector<std::uint64_t> labels) {
    struct State {
        ModelParams params;
        std::vector<Image> images;
        std::vector<std::uint64_t> labels;
    };
    auto state = std::make_shared<State>(State{params, std::move(images), std::move(labels)});
    auto with = [state](std::span<const double> theta) {
        ModelParams p = state->params;
        p.values.assign(theta.begin(), theta.end());
        return p;
    };
    DifferentiableFunction fn;
    fn.value = [state, with](std::span<const double> theta) {
        return loss_and_gradient(with(theta), state->images, state->labels, nullptr, Exec::serial).total;
    };
    fn.gradient = [state, with](std::span<const double> theta) {
        std::vector<double> g;
        loss_and_gradient(with(theta), state->images, state->labels, &g, Exec::serial);
        return g;
    };
    fn.straddles_kink = [state, with](std::span<const double> a, std::span<const double> b) {
        const Matrix fa = embed(with(a), state->images, Exec::serial);
        const Matrix fb = embed(with(b), state->images, Exec::serial);
        const HardTriplets ta = select_hard_triplets(squared_euclidean_matrix(fa), state->labels);
        const HardTriplets tb = select_hard_triplets(squared_euclidean_matrix(fb), state->labels);
        if (ta.positive != tb.positive || ta.negative != tb.negative) return true;
        for (std::size_t i = 0; i < ta.gap.size(); ++i) {
            if (ta.gap[i] < 1e-7 || tb.gap[i] < 1e-7) return true;
        }
        return false;
    };
    return fn;
}

TrainTrace train_steps(ModelParams& params, const LabeledImages& data, const TrainConfig& train,
                       const MixupConfig* mixup, Exec exec) {
    train.validate();
    if (data.images.size() != data.labels.size()) throw Error(ErrorKind::shape, "one label per image required");
    std::map<std::uint64_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < data.labels.size(); ++i) by_label[data.labels[i]].push_back(i);
    std::vector<std::uint64_t> usable;
    for (const auto& [label, idx] : by_label) {
        if (idx.size() >= train.K) usable.push_back(label);
    }
    if (usable.size() < train.P) {
        throw Error(ErrorKind::degenerate_dataset, "need " + std::to_string(train.P) + " identities with at least " +
                                                       std::to_string(train.K) + " instances, found " +
                                                       std::to_string(usable.size()));
    }

    TrainTrace trace;
    std::vector<double> velocity(params.values.size(), 0.0);
    std::vector<double> grad;
    for (std::size_t step = 0; step < train.steps; ++step) {
        Rng rng = Rng::split(params.config.seed, step);
        std::vector<Image> batch;
        std::vector<std::uint64_t> labels;
        // Sorted picks: the same identity/instance set always forms the same batch.
        std::vector<std::size_t> picked_ids = rng.sample_without_replacement(usable.size(), train.P);
        std::sort(picked_ids.begin(), picked_ids.end());
        for (std::size_t pi : picked_ids) {
            const auto& members = by_label.at(usable[pi]);
            std::vector<std::size_t> picked = rng.sample_without_replacement(members.size(), train.K);
            std::sort(picked.begin(), picked.end());
            for (std::size_t ki : picked) {
                batch.push_back(data.images[members[ki]]);
                labels.push_back(usable[pi]);
            }
        }
        if (train.use_mixup && mixup != nullptr) batch = augment_batch(batch, *mixup, step + 1, exec);

        const BatchLoss loss = loss_and_gradient(params, batch, labels, &grad, exec);
        trace.total.push_back(loss.total);
        trace.id.push_back(loss.id);
        trace.triplet.push_back(loss.triplet);

        double scale = 1.0;
        if (train.grad_clip > 0.0) {
            double sq = 0.0;
            for (double g : grad) sq += g * g;
            const double norm = std::sqrt(sq);
            if (norm > train.grad_clip) scale = train.grad_clip / norm;
        }
        for (std::size_t k = 0; k < params.values.size(); ++k) {
            const double g = scale * grad[k] + train.weight_decay * params.values[k];
            velocity[k] = train.momentum * velocity[k] + g;
            params.values[k] -= train.lr * velocity[k];
        }
        for (double v : params.values) {
            if (!std::isfinite(v)) throw Error(ErrorKind::degenerate_dataset, "training diverged (non-finite parameter)");
        }
    }
    return trace;
}

}  // namespace arreid
