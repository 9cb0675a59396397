#include "meshcnn/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "meshcnn/errors.hpp"
#include "meshcnn/rng.hpp"

namespace meshcnn {

using nlohmann::json;

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::expand_conv: return "expand_conv";
        case LayerKind::conv_only: return "conv_only";
        case LayerKind::dense: return "dense";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "expand_conv") return LayerKind::expand_conv;
    if (s == "conv_only") return LayerKind::conv_only;
    if (s == "dense") return LayerKind::dense;
    throw UsageError("unknown layer kind '" + s + "'");
}

void NetworkSpec::validate() const {
    if (input_features <= 0) {
        throw UsageError("network spec needs a positive input feature count");
    }
    if (layers.empty()) {
        throw UsageError("network spec has no layers");
    }
    for (const auto& l : layers) {
        if (l.out_channels <= 0) {
            throw UsageError("layer out_channels must be positive");
        }
        if (l.repeat <= 0) {
            throw UsageError("layer repeat must be positive");
        }
        if (l.kind == LayerKind::expand_conv) {
            if (l.rings.size() != 3) {
                throw UsageError("expansion blocks take exactly 3 ring numbers");
            }
            for (int r : l.rings) {
                if (r < 0) throw UsageError("ring numbers must be >= 0");
            }
        } else if (!l.rings.empty()) {
            throw UsageError("only expansion blocks carry ring numbers");
        }
    }
    if (layers.back().out_channels != 2) {
        throw UsageError("final layer must emit 2 channels, got " +
                         std::to_string(layers.back().out_channels));
    }
}

namespace {

struct Group {
    int channels;
    int repeat;
};

// Shared channel ladder of the named stacks: sixteen conv layers.
constexpr Group kLadder[] = {{16, 2}, {32, 3}, {64, 3}, {32, 3}, {16, 2}, {4, 2}, {2, 1}};

// Per-group ring triples of the mixed-reach stack.
const std::vector<std::vector<int>> kMixedRings = {
    {0, 1, 2}, {0, 2, 4}, {0, 4, 8}, {0, 2, 4}, {0, 1, 2}, {0, 1, 2}, {0, 1, 2}};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

NetworkSpec preset(const std::string& name, int input_features) {
    const std::string key = lower(name);
    NetworkSpec spec;
    spec.input_features = input_features;

    auto conv_ladder = [&spec](const std::function<std::vector<int>(int)>& rings_for_group) {
        for (int g = 0; g < 7; ++g) {
            LayerSpec l;
            const std::vector<int> rings = rings_for_group(g);
            l.kind = rings.empty() ? LayerKind::conv_only : LayerKind::expand_conv;
            l.rings = rings;
            l.out_channels = kLadder[g].channels;
            l.repeat = kLadder[g].repeat;
            spec.layers.push_back(l);
        }
    };

    if (key == "baseline") {
        spec.name = "Baseline";
        conv_ladder([](int) { return std::vector<int>{}; });
    } else if (key == "a") {
        spec.name = "A";
        conv_ladder([](int) { return std::vector<int>{0, 1, 2}; });
    } else if (key == "b") {
        spec.name = "B";
        conv_ladder([](int) { return std::vector<int>{0, 2, 4}; });
    } else if (key == "c") {
        spec.name = "C";
        conv_ladder([](int) { return std::vector<int>{0, 4, 8}; });
    } else if (key == "d") {
        spec.name = "D";
        conv_ladder([](int g) { return kMixedRings[g]; });
    } else if (key == "e") {
        spec.name = "E";
        for (int g = 0; g < 5; ++g) {
            LayerSpec l;
            l.kind = LayerKind::expand_conv;
            l.rings = kMixedRings[g];
            l.out_channels = kLadder[g].channels;
            l.repeat = kLadder[g].repeat;
            spec.layers.push_back(l);
        }
        for (int channels : {128, 512, 128, 2}) {
            LayerSpec l;
            l.kind = LayerKind::dense;
            l.out_channels = channels;
            l.repeat = 1;
            spec.layers.push_back(l);
        }
    } else {
        throw UsageError("unknown network preset '" + name +
                         "' (expected baseline, a, b, c, d or e)");
    }
    spec.validate();
    return spec;
}

std::vector<int> required_rings(const NetworkSpec& spec) {
    std::set<int> rings;
    for (const auto& l : spec.layers) {
        if (l.kind == LayerKind::expand_conv) {
            rings.insert(l.rings.begin(), l.rings.end());
        }
    }
    return {rings.begin(), rings.end()};
}

std::string NetworkSpec::to_json() const {
    json j;
    j["name"] = name;
    j["input_features"] = input_features;
    j["layers"] = json::array();
    for (const auto& l : layers) {
        json jl;
        jl["kind"] = meshcnn::to_string(l.kind);
        if (!l.rings.empty()) jl["rings"] = l.rings;
        jl["out_channels"] = l.out_channels;
        jl["repeat"] = l.repeat;
        j["layers"].push_back(jl);
    }
    return j.dump(2);
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad network spec JSON: ") + e.what());
    }
    NetworkSpec spec;
    try {
        spec.name = j.value("name", std::string("Custom"));
        spec.input_features = j.value("input_features", 0);
        for (const auto& jl : j.at("layers")) {
            LayerSpec l;
            l.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
            if (jl.contains("rings")) l.rings = jl["rings"].get<std::vector<int>>();
            l.out_channels = jl.at("out_channels").get<int>();
            l.repeat = jl.value("repeat", 1);
            spec.layers.push_back(l);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("bad network spec JSON: ") + e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

namespace {

void he_uniform(Tensor& t, int fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
}

} // namespace

Network Network::instantiate(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Network net;
    net.spec_ = spec;
    Rng rng(seed);

    int channels = spec.input_features;
    std::vector<std::size_t> param_layer_positions;
    for (const auto& l : spec.layers) {
        for (int rep = 0; rep < l.repeat; ++rep) {
            switch (l.kind) {
                case LayerKind::expand_conv: {
                    net.layers_.push_back(std::make_unique<nn::ExpandLayer>(l.rings));
                    auto conv = std::make_unique<nn::ConvRingLayer>(
                        static_cast<int>(l.rings.size()), channels, l.out_channels);
                    he_uniform(conv->kernel,
                               static_cast<int>(l.rings.size()) * channels, rng);
                    param_layer_positions.push_back(net.layers_.size());
                    net.layers_.push_back(std::move(conv));
                    break;
                }
                case LayerKind::conv_only: {
                    auto conv = std::make_unique<nn::ConvRingLayer>(1, channels,
                                                                    l.out_channels);
                    he_uniform(conv->kernel, channels, rng);
                    param_layer_positions.push_back(net.layers_.size());
                    net.layers_.push_back(std::move(conv));
                    break;
                }
                case LayerKind::dense: {
                    auto dense = std::make_unique<nn::DenseLayer>(channels, l.out_channels);
                    he_uniform(dense->weights, channels, rng);
                    param_layer_positions.push_back(net.layers_.size());
                    net.layers_.push_back(std::move(dense));
                    break;
                }
            }
            channels = l.out_channels;
        }
    }

    // ReLU after every parameterized layer except the final logits layer.
    // Insert back to front so recorded positions stay valid.
    for (std::size_t k = param_layer_positions.size(); k-- > 1;) {
        const std::size_t pos = param_layer_positions[k - 1];
        net.layers_.insert(net.layers_.begin() + pos + 1, std::make_unique<nn::ReluLayer>());
    }
    return net;
}

Network::Network(const Network& other) : spec_(other.spec_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Tensor Network::forward(const Tensor& x, const RingAdjacency* adj) const {
    nn::LayerContext ctx{adj};
    Tensor cur = x;
    for (const auto& layer : layers_) {
        cur = layer->forward(cur, ctx);
    }
    return cur;
}

Network::ForwardTrace Network::forward_trace(const Tensor& x, const RingAdjacency* adj) const {
    nn::LayerContext ctx{adj};
    ForwardTrace trace;
    trace.layer_inputs.reserve(layers_.size());
    Tensor cur = x;
    for (const auto& layer : layers_) {
        trace.layer_inputs.push_back(cur);
        cur = layer->forward(cur, ctx);
    }
    trace.output = std::move(cur);
    return trace;
}

Tensor Network::backward(const ForwardTrace& trace, const Tensor& d_output,
                         const RingAdjacency* adj) {
    if (trace.layer_inputs.size() != layers_.size()) {
        throw UsageError("forward trace does not match network depth");
    }
    nn::LayerContext ctx{adj};
    Tensor grad = d_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        grad = layers_[i]->backward(trace.layer_inputs[i], grad, ctx);
    }
    return grad;
}

std::vector<nn::ParamBlock> Network::param_blocks() {
    std::vector<nn::ParamBlock> blocks;
    int index = 0;
    for (auto& layer : layers_) {
        for (auto& b : layer->params()) {
            b.name = "layer" + std::to_string(index) + "." + b.name;
            blocks.push_back(b);
        }
        ++index;
    }
    return blocks;
}

void Network::zero_grads() {
    for (auto& layer : layers_) layer->zero_grads();
}

std::int64_t Network::parameter_count() const {
    std::int64_t count = 0;
    for (const auto& layer : layers_) {
        for (auto& b : const_cast<nn::Layer&>(*layer).params()) {
            count += b.value->numel();
        }
    }
    return count;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(Network& net, const FeatureSelection& sel,
                     const std::filesystem::path& path) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "meshcnn-checkpoint";
    j["spec"] = json::parse(net.spec().to_json());
    j["feature_selection"] = sel.to_string();
    j["params"] = json::array();
    for (auto& b : net.param_blocks()) {
        json jp;
        jp["name"] = b.name;
        jp["shape"] = b.value->shape;
        jp["data"] = b.value->data;
        j["params"].push_back(jp);
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw DataError(std::string("bad checkpoint JSON: ") + e.what());
    }
    if (j.value("kind", std::string()) != "meshcnn-checkpoint") {
        throw DataError("not a checkpoint file: " + path.string());
    }
    if (j.value("format_version", 0) != 1) {
        throw DataError("unsupported checkpoint version in " + path.string());
    }
    NetworkSpec spec = NetworkSpec::from_json(j.at("spec").dump());
    Network net = Network::instantiate(spec, 0);
    auto blocks = net.param_blocks();
    const auto& params = j.at("params");
    if (params.size() != blocks.size()) {
        throw DataError("checkpoint parameter count does not match spec");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto shape = params[i].at("shape").get<std::vector<int>>();
        if (shape != blocks[i].value->shape) {
            throw DataError("checkpoint tensor shape mismatch for " +
                            params[i].value("name", std::string("?")));
        }
        blocks[i].value->data = params[i].at("data").get<std::vector<double>>();
    }
    Checkpoint cp{std::move(net), FeatureSelection::parse(j.at("feature_selection")
                                                              .get<std::string>())};
    return cp;
}

} // namespace meshcnn
