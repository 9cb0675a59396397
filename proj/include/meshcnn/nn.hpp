#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshcnn/expand.hpp"
#include "meshcnn/mesh.hpp"
#include "meshcnn/rings.hpp"
#include "meshcnn/tensor.hpp"

namespace meshcnn::nn {

using meshcnn::Tensor;

// ---------------------------------------------------------------------------
// Elementwise / rowwise primitives
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& t);
Tensor sigmoid(const Tensor& t);
double sigmoid(double z);

// Rowwise softmax over the last axis; accepts {n, c} or {1, n, c}.
// Output rows sum to 1 within 1e-9.
Tensor softmax_rows(const Tensor& t);

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// weighted_ce is the standard weighted binary cross entropy on logits,
// computed in softplus form so finite logits can never produce NaN.
// paper_literal keeps the un-logged second term for comparison runs:
//   -mean(w * t * log(sigmoid(z))) - mean((1 - t) * (1 - sigmoid(z))).
enum class LossKind { weighted_ce, paper_literal };

struct LossValueGrad {
    double value = 0.0;
    std::vector<double> d_logit_pos; // dLoss/dz per vertex
};

LossValueGrad weighted_ce_loss(std::span<const double> logit_pos,
                               std::span<const std::uint8_t> targets, double pos_weight,
                               LossKind kind = LossKind::weighted_ce);

// Bridges a {1, n, 2} logit tensor to the binary loss: the positive logit is
// channel1 - channel0, which makes the 2-channel softmax head and the binary
// sigmoid formulation the same function.
struct LogitsLoss {
    double value = 0.0;
    Tensor d_logits; // {1, n, 2}
};

LogitsLoss classification_loss(const Tensor& logits, std::span<const std::uint8_t> targets,
                               double pos_weight, LossKind kind = LossKind::weighted_ce);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

struct ParamBlock {
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
    std::string name;
};

struct LayerContext {
    const RingAdjacency* adj = nullptr; // required only by expansion layers
};

// Layers are stateless in forward; backward receives the recorded layer input,
// accumulates parameter gradients and returns the input gradient.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& in, const LayerContext& ctx) const = 0;
    virtual Tensor backward(const Tensor& in, const Tensor& grad_out,
                            const LayerContext& ctx) = 0;
    virtual std::vector<ParamBlock> params() { return {}; }
    virtual void zero_grads() {}
    virtual std::string describe() const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;
};

// Per-vertex convolution whose kernel spans the ring slots of the input:
// out[0,i,o] = bias[o] + sum_{r,c} in[r,i,c] * kernel[r,0,c,o].
// No mixing across the vertex axis, so the op is permutation equivariant.
// With R = 1 this degenerates to a 1x1 convolution (a per-vertex affine map).
class ConvRingLayer : public Layer {
public:
    ConvRingLayer(int ring_slots, int in_channels, int out_channels);

    Tensor forward(const Tensor& in, const LayerContext& ctx) const override;
    Tensor backward(const Tensor& in, const Tensor& grad_out,
                    const LayerContext& ctx) override;
    std::vector<ParamBlock> params() override;
    void zero_grads() override;
    std::string describe() const override;
    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<ConvRingLayer>(*this);
    }

    int ring_slots() const { return ring_slots_; }
    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }

    Tensor kernel; // {R, 1, c_in, c_out}
    Tensor bias;   // {c_out}

private:
    int ring_slots_, in_channels_, out_channels_;
    Tensor kernel_grad_, bias_grad_;
};

// Per-vertex fully connected map on {1, n, c_in}.
class DenseLayer : public Layer {
public:
    DenseLayer(int in_channels, int out_channels);

    Tensor forward(const Tensor& in, const LayerContext& ctx) const override;
    Tensor backward(const Tensor& in, const Tensor& grad_out,
                    const LayerContext& ctx) override;
    std::vector<ParamBlock> params() override;
    void zero_grads() override;
    std::string describe() const override;
    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<DenseLayer>(*this);
    }

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }

    Tensor weights; // {c_in, c_out}
    Tensor bias;    // {c_out}

private:
    int in_channels_, out_channels_;
    Tensor weights_grad_, bias_grad_;
};

class ReluLayer : public Layer {
public:
    Tensor forward(const Tensor& in, const LayerContext& ctx) const override;
    Tensor backward(const Tensor& in, const Tensor& grad_out,
                    const LayerContext& ctx) override;
    std::string describe() const override { return "relu"; }
    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<ReluLayer>(*this);
    }
};

// Mean-pools the single input slot over the layer's ring list, producing one
// slot per ring. Parameter free; the adjacency comes from the context and
// must contain a slot for every listed ring.
class ExpandLayer : public Layer {
public:
    explicit ExpandLayer(std::vector<int> rings) : rings_(std::move(rings)) {}

    Tensor forward(const Tensor& in, const LayerContext& ctx) const override;
    Tensor backward(const Tensor& in, const Tensor& grad_out,
                    const LayerContext& ctx) override;
    std::string describe() const override;
    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<ExpandLayer>(*this);
    }

    const std::vector<int>& rings() const { return rings_; }

private:
    std::vector<int> rings_;
};

// Thin functional forms of the layer ops.
Tensor conv_ring_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias);
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

// Plain gradient descent with a stepwise learning-rate drop schedule and a
// positive-class loss weight.
struct SgdSchedule {
    double initial_lr = 0.01;
    std::vector<std::pair<int, double>> drops = {{5000, 0.003}, {10000, 0.001}};
    int total_steps = 11500;
    double pos_weight = 3.0;

    double learning_rate(int step) const;
    void validate() const;
};

// p <- p - lr(step) * g for every parameter block. A non-finite gradient
// aborts the step with a diagnostic naming the offending parameter.
void sgd_step(std::vector<ParamBlock> params, const SgdSchedule& schedule, int step);

} // namespace meshcnn::nn
