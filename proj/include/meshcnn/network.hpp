#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "meshcnn/features.hpp"
#include "meshcnn/nn.hpp"

namespace meshcnn {

enum class LayerKind { expand_conv, conv_only, dense };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

// One block of the declarative stack. expand_conv pairs a 3-ring expansion
// with a ring convolution; conv_only is the per-vertex 1x1 variant; dense is
// a per-vertex fully connected layer. `repeat` stacks the block.
struct LayerSpec {
    LayerKind kind = LayerKind::expand_conv;
    std::vector<int> rings; // exactly 3 entries for expand_conv, empty otherwise
    int out_channels = 0;
    int repeat = 1;
};

struct NetworkSpec {
    std::string name = "Custom";
    int input_features = 0;
    std::vector<LayerSpec> layers;

    void validate() const; // throws UsageError on violation

    std::string to_json() const;
    static NetworkSpec from_json(const std::string& text);
};

// The six named stacks share a fixed channel ladder
// (16x2, 32x3, 64x3, 32x3, 16x2, 4x2, 2x1 - sixteen conv layers):
//   baseline  1x1 convolutions only (a per-vertex MLP)
//   a         every block expands rings (0,1,2)
//   b         rings (0,2,4)
//   c         rings (0,4,8)
//   d         mixed reach: (0,1,2)/(0,2,4)/(0,4,8)/(0,2,4)/(0,1,2)/(0,1,2)/(0,1,2)
//   e         the first five blocks of d, then fc-128, fc-512, fc-128, fc-2
// Names are case insensitive.
NetworkSpec preset(const std::string& name, int input_features);

// Union of all ring numbers used by expansion blocks, ascending. Empty for
// stacks without expansions.
std::vector<int> required_rings(const NetworkSpec& spec);

// An instantiated stack: layer objects plus their parameters. Single writer
// during training; concurrent inference on a const instance is safe.
class Network {
public:
    static Network instantiate(const NetworkSpec& spec, std::uint64_t seed);

    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    const NetworkSpec& spec() const { return spec_; }
    int input_features() const { return spec_.input_features; }

    // x is {1, n, input_features}; adj may be null for stacks without
    // expansions. Returns {1, n, 2} logits.
    Tensor forward(const Tensor& x, const RingAdjacency* adj) const;

    struct ForwardTrace {
        std::vector<Tensor> layer_inputs;
        Tensor output;
    };
    ForwardTrace forward_trace(const Tensor& x, const RingAdjacency* adj) const;

    // Accumulates parameter gradients from d_output; returns gradient w.r.t.
    // the network input.
    Tensor backward(const ForwardTrace& trace, const Tensor& d_output,
                    const RingAdjacency* adj);

    std::vector<nn::ParamBlock> param_blocks();
    void zero_grads();
    std::int64_t parameter_count() const;

    const std::vector<std::unique_ptr<nn::Layer>>& layers() const { return layers_; }
    std::vector<std::unique_ptr<nn::Layer>>& layers() { return layers_; }

private:
    Network() = default;

    NetworkSpec spec_;
    std::vector<std::unique_ptr<nn::Layer>> layers_;
};

// Versioned JSON checkpoint: the spec, the feature selection the parameters
// were trained with, and every parameter tensor. Doubles round-trip exactly.
void save_checkpoint(Network& net, const FeatureSelection& sel,
                     const std::filesystem::path& path);

struct Checkpoint {
    Network net;
    FeatureSelection selection;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace meshcnn
