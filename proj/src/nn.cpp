#include "meshcnn/nn.hpp"

#include <cmath>
#include <string>

#include "meshcnn/errors.hpp"

namespace meshcnn::nn {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw DataError(msg);
}

// log(1 + exp(x)) without overflow for large |x|.
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

} // namespace

Tensor relu(const Tensor& t) {
    Tensor out = t;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& t) {
    Tensor out = t;
    for (double& v : out.data) v = sigmoid(v);
    return out;
}

Tensor softmax_rows(const Tensor& t) {
    require(t.rank() == 2 || (t.rank() == 3 && t.dim(0) == 1),
            "softmax_rows expects {n,c} or {1,n,c}");
    const int c = t.shape.back();
    const std::int64_t rows = t.numel() / c;
    Tensor out = t;
    for (std::int64_t i = 0; i < rows; ++i) {
        double* row = out.data.data() + i * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < c; ++j) row[j] /= sum;
    }
    return out;
}

LossValueGrad weighted_ce_loss(std::span<const double> logit_pos,
                               std::span<const std::uint8_t> targets, double pos_weight,
                               LossKind kind) {
    require(logit_pos.size() == targets.size(),
            "loss: logit count does not match target count");
    const std::size_t n = logit_pos.size();
    require(n > 0, "loss: empty input");

    LossValueGrad out;
    out.d_logit_pos.resize(n);
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logit_pos[i];
        const double t = targets[i] ? 1.0 : 0.0;
        const double s = sigmoid(z);
        if (kind == LossKind::weighted_ce) {
            // -[w*t*log(s) + (1-t)*log(1-s)] in softplus form
            total += pos_weight * t * softplus(-z) + (1.0 - t) * softplus(z);
            out.d_logit_pos[i] = (pos_weight * t * (s - 1.0) + (1.0 - t) * s) * inv_n;
        } else {
            total += -pos_weight * t * (-softplus(-z)) - (1.0 - t) * (1.0 - s);
            out.d_logit_pos[i] =
                (pos_weight * t * (s - 1.0) + (1.0 - t) * s * (1.0 - s)) * inv_n;
        }
    }
    out.value = total * inv_n;
    return out;
}

LogitsLoss classification_loss(const Tensor& logits, std::span<const std::uint8_t> targets,
                               double pos_weight, LossKind kind) {
    require(logits.rank() == 3 && logits.dim(0) == 1 && logits.dim(2) == 2,
            "classification loss expects {1, n, 2} logits");
    const int n = logits.dim(1);
    require(static_cast<std::size_t>(n) == targets.size(),
            "classification loss: target count mismatch");

    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) {
        z[i] = logits.data[2 * i + 1] - logits.data[2 * i];
    }
    LossValueGrad base = weighted_ce_loss(z, targets, pos_weight, kind);

    LogitsLoss out;
    out.value = base.value;
    out.d_logits = Tensor::zeros({1, n, 2});
    for (int i = 0; i < n; ++i) {
        out.d_logits.data[2 * i + 1] = base.d_logit_pos[i];
        out.d_logits.data[2 * i] = -base.d_logit_pos[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// ConvRingLayer
// ---------------------------------------------------------------------------

ConvRingLayer::ConvRingLayer(int ring_slots, int in_channels, int out_channels)
    : ring_slots_(ring_slots), in_channels_(in_channels), out_channels_(out_channels) {
    require(ring_slots > 0 && in_channels > 0 && out_channels > 0,
            "conv layer dimensions must be positive");
    kernel = Tensor::zeros({ring_slots, 1, in_channels, out_channels});
    bias = Tensor::zeros({out_channels});
    kernel_grad_ = Tensor::zeros(kernel.shape);
    bias_grad_ = Tensor::zeros(bias.shape);
}

Tensor ConvRingLayer::forward(const Tensor& in, const LayerContext&) const {
    require(in.rank() == 3 && in.dim(0) == ring_slots_ && in.dim(2) == in_channels_,
            "conv input shape mismatch: " + describe());
    const int n = in.dim(1);
    Tensor out = Tensor::zeros({1, n, out_channels_});
    for (int i = 0; i < n; ++i) {
        double* dst = out.data.data() + static_cast<std::size_t>(i) * out_channels_;
        for (int o = 0; o < out_channels_; ++o) dst[o] = bias.data[o];
        for (int r = 0; r < ring_slots_; ++r) {
            const double* src =
                in.data.data() + (static_cast<std::size_t>(r) * n + i) * in_channels_;
            const double* kr =
                kernel.data.data() +
                static_cast<std::size_t>(r) * in_channels_ * out_channels_;
            for (int c = 0; c < in_channels_; ++c) {
                const double v = src[c];
                const double* kc = kr + static_cast<std::size_t>(c) * out_channels_;
                for (int o = 0; o < out_channels_; ++o) dst[o] += v * kc[o];
            }
        }
    }
    return out;
}

Tensor ConvRingLayer::backward(const Tensor& in, const Tensor& grad_out,
                               const LayerContext&) {
    const int n = in.dim(1);
    require(grad_out.rank() == 3 && grad_out.dim(0) == 1 && grad_out.dim(1) == n &&
                grad_out.dim(2) == out_channels_,
            "conv grad shape mismatch");
    Tensor grad_in = Tensor::zeros(in.shape);
    for (int i = 0; i < n; ++i) {
        const double* go =
            grad_out.data.data() + static_cast<std::size_t>(i) * out_channels_;
        for (int o = 0; o < out_channels_; ++o) bias_grad_.data[o] += go[o];
        for (int r = 0; r < ring_slots_; ++r) {
            const std::size_t in_off = (static_cast<std::size_t>(r) * n + i) * in_channels_;
            const double* src = in.data.data() + in_off;
            double* gi = grad_in.data.data() + in_off;
            const std::size_t k_off =
                static_cast<std::size_t>(r) * in_channels_ * out_channels_;
            for (int c = 0; c < in_channels_; ++c) {
                const double* kc = kernel.data.data() + k_off + c * out_channels_;
                double* kg = kernel_grad_.data.data() + k_off + c * out_channels_;
                double acc = 0.0;
                const double v = src[c];
                for (int o = 0; o < out_channels_; ++o) {
                    acc += go[o] * kc[o];
                    kg[o] += go[o] * v;
                }
                gi[c] += acc;
            }
        }
    }
    return grad_in;
}

std::vector<ParamBlock> ConvRingLayer::params() {
    return {{&kernel, &kernel_grad_, describe() + ".kernel"},
            {&bias, &bias_grad_, describe() + ".bias"}};
}

void ConvRingLayer::zero_grads() {
    kernel_grad_.fill(0.0);
    bias_grad_.fill(0.0);
}

std::string ConvRingLayer::describe() const {
    return "conv(" + std::to_string(ring_slots_) + "x1)-" + std::to_string(out_channels_);
}

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(int in_channels, int out_channels)
    : in_channels_(in_channels), out_channels_(out_channels) {
    require(in_channels > 0 && out_channels > 0, "dense layer dimensions must be positive");
    weights = Tensor::zeros({in_channels, out_channels});
    bias = Tensor::zeros({out_channels});
    weights_grad_ = Tensor::zeros(weights.shape);
    bias_grad_ = Tensor::zeros(bias.shape);
}

Tensor DenseLayer::forward(const Tensor& in, const LayerContext&) const {
    require((in.rank() == 3 && in.dim(0) == 1 && in.dim(2) == in_channels_) ||
                (in.rank() == 2 && in.dim(1) == in_channels_),
            "dense input shape mismatch: " + describe());
    const int n = in.rank() == 3 ? in.dim(1) : in.dim(0);
    Tensor out = in.rank() == 3 ? Tensor::zeros({1, n, out_channels_})
                                : Tensor::zeros({n, out_channels_});
    for (int i = 0; i < n; ++i) {
        const double* src = in.data.data() + static_cast<std::size_t>(i) * in_channels_;
        double* dst = out.data.data() + static_cast<std::size_t>(i) * out_channels_;
        for (int o = 0; o < out_channels_; ++o) dst[o] = bias.data[o];
        for (int c = 0; c < in_channels_; ++c) {
            const double v = src[c];
            const double* wc = weights.data.data() + static_cast<std::size_t>(c) * out_channels_;
            for (int o = 0; o < out_channels_; ++o) dst[o] += v * wc[o];
        }
    }
    return out;
}

Tensor DenseLayer::backward(const Tensor& in, const Tensor& grad_out, const LayerContext&) {
    const int n = in.rank() == 3 ? in.dim(1) : in.dim(0);
    require(grad_out.numel() == static_cast<std::int64_t>(n) * out_channels_,
            "dense grad shape mismatch");
    Tensor grad_in = Tensor::zeros(in.shape);
    for (int i = 0; i < n; ++i) {
        const double* src = in.data.data() + static_cast<std::size_t>(i) * in_channels_;
        const double* go = grad_out.data.data() + static_cast<std::size_t>(i) * out_channels_;
        double* gi = grad_in.data.data() + static_cast<std::size_t>(i) * in_channels_;
        for (int o = 0; o < out_channels_; ++o) bias_grad_.data[o] += go[o];
        for (int c = 0; c < in_channels_; ++c) {
            const double* wc = weights.data.data() + static_cast<std::size_t>(c) * out_channels_;
            double* wg = weights_grad_.data.data() + static_cast<std::size_t>(c) * out_channels_;
            double acc = 0.0;
            const double v = src[c];
            for (int o = 0; o < out_channels_; ++o) {
                acc += go[o] * wc[o];
                wg[o] += go[o] * v;
            }
            gi[c] += acc;
        }
    }
    return grad_in;
}

std::vector<ParamBlock> DenseLayer::params() {
    return {{&weights, &weights_grad_, describe() + ".weights"},
            {&bias, &bias_grad_, describe() + ".bias"}};
}

void DenseLayer::zero_grads() {
    weights_grad_.fill(0.0);
    bias_grad_.fill(0.0);
}

std::string DenseLayer::describe() const { return "fc-" + std::to_string(out_channels_); }

// ---------------------------------------------------------------------------
// ReluLayer / ExpandLayer
// ---------------------------------------------------------------------------

Tensor ReluLayer::forward(const Tensor& in, const LayerContext&) const { return relu(in); }

Tensor ReluLayer::backward(const Tensor& in, const Tensor& grad_out, const LayerContext&) {
    require(in.same_shape(grad_out), "relu grad shape mismatch");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
        if (in.data[i] <= 0.0) grad_in.data[i] = 0.0;
    }
    return grad_in;
}

Tensor ExpandLayer::forward(const Tensor& in, const LayerContext& ctx) const {
    require(in.rank() == 3 && in.dim(0) == 1, "expand input must be {1, n, c}");
    require(ctx.adj != nullptr, "expansion layer needs a ring adjacency");
    const int n = in.dim(1);
    const int c = in.dim(2);
    require(ctx.adj->vertex_count() == n, "adjacency vertex count mismatch");

    std::vector<int> slots;
    slots.reserve(rings_.size());
    for (int ring : rings_) {
        const auto slot = ctx.adj->slot_for_ring(ring);
        require(slot.has_value(), "adjacency has no slot for ring " + std::to_string(ring));
        slots.push_back(*slot);
    }
    Tensor out = Tensor::zeros({static_cast<int>(rings_.size()), n, c});
    expand_slots(in.data.data(), n, c, *ctx.adj, slots, out.data.data());
    return out;
}

Tensor ExpandLayer::backward(const Tensor& in, const Tensor& grad_out,
                             const LayerContext& ctx) {
    const int n = in.dim(1);
    const int c = in.dim(2);
    Tensor grad_in = Tensor::zeros(in.shape);
    for (std::size_t s = 0; s < rings_.size(); ++s) {
        const auto slot = ctx.adj->slot_for_ring(rings_[s]);
        for (int i = 0; i < n; ++i) {
            const auto row = ctx.adj->row(*slot, i);
            if (row.empty()) continue;
            const double inv = 1.0 / static_cast<double>(row.size());
            const double* src = grad_out.data.data() + (s * n + i) * c;
            for (int j : row) {
                double* dst = grad_in.data.data() + static_cast<std::size_t>(j) * c;
                for (int f = 0; f < c; ++f) dst[f] += inv * src[f];
            }
        }
    }
    return grad_in;
}

std::string ExpandLayer::describe() const {
    std::string s = "expand(";
    for (std::size_t i = 0; i < rings_.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(rings_[i]);
    }
    return s + ")";
}

Tensor conv_ring_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    require(kernel.rank() == 4 && kernel.dim(1) == 1, "kernel must be {R,1,c_in,c_out}");
    ConvRingLayer layer(kernel.dim(0), kernel.dim(2), kernel.dim(3));
    layer.kernel = kernel;
    layer.bias = bias;
    return layer.forward(input, {});
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require(weights.rank() == 2, "weights must be {c_in,c_out}");
    DenseLayer layer(weights.dim(0), weights.dim(1));
    layer.weights = weights;
    layer.bias = bias;
    return layer.forward(input, {});
}

// ---------------------------------------------------------------------------
// SGD
// ---------------------------------------------------------------------------

double SgdSchedule::learning_rate(int step) const {
    double lr = initial_lr;
    for (const auto& [threshold, rate] : drops) {
        if (step >= threshold) lr = rate;
    }
    return lr;
}

void SgdSchedule::validate() const {
    if (initial_lr <= 0.0) throw UsageError("initial learning rate must be positive");
    if (total_steps <= 0) throw UsageError("total steps must be positive");
    if (pos_weight <= 0.0) throw UsageError("positive class weight must be positive");
    int prev = -1;
    for (const auto& [threshold, rate] : drops) {
        if (threshold <= prev) {
            throw UsageError("learning-rate drop steps must be strictly increasing");
        }
        if (rate <= 0.0) throw UsageError("learning rates must be positive");
        prev = threshold;
    }
}

void sgd_step(std::vector<ParamBlock> params, const SgdSchedule& schedule, int step) {
    const double lr = schedule.learning_rate(step);
    for (auto& p : params) {
        for (double g : p.grad->data) {
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient in " + p.name + " at step " +
                                   std::to_string(step));
            }
        }
        for (std::size_t i = 0; i < p.value->data.size(); ++i) {
            p.value->data[i] -= lr * p.grad->data[i];
        }
    }
}

} // namespace meshcnn::nn
