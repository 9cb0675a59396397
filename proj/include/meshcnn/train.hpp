#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "meshcnn/dataset.hpp"
#include "meshcnn/network.hpp"
#include "meshcnn/nn.hpp"

namespace meshcnn {

// Pooled confusion counts and the derived ratios. Zero denominators yield 0.
struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    int step = 0;
    double loss = 0.0;

    static MetricsReport from_counts(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                     std::int64_t fn, int step = 0, double loss = 0.0);
};

struct TrainConfig {
    nn::SgdSchedule schedule;
    int eval_every = 500;
    nn::LossKind loss_kind = nn::LossKind::weighted_ce;
};

// Persists a training run: config snapshot, metrics CSV
// (step,split,accuracy,precision,recall,loss) and last/best checkpoints.
class RunWriter {
public:
    explicit RunWriter(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    void write_config(const std::string& json_text);
    void append_metrics(const std::string& split, const MetricsReport& report);
    void save_last(Network& net, const FeatureSelection& sel);
    // Keeps the checkpoint whose validation accuracy is the highest seen.
    void save_if_best(Network& net, const FeatureSelection& sel, double accuracy);

    std::filesystem::path last_checkpoint() const { return dir_ / "checkpoint_last.json"; }
    std::filesystem::path best_checkpoint() const { return dir_ / "checkpoint_best.json"; }
    std::filesystem::path metrics_csv() const { return dir_ / "metrics.csv"; }

private:
    std::filesystem::path dir_;
    double best_accuracy_ = -1.0;
};

struct TrainResult {
    Network net; // state after the final step
    std::vector<MetricsReport> history;
};

// Runs schedule.total_steps steps, one mesh per step, shuffling the train
// split each epoch with a seeded generator. Validates every eval_every steps
// when a validation set is given (plus once at the end when the step count is
// not a multiple). Non-finite loss aborts with the step and mesh id.
TrainResult train(const Dataset& train_set, const Dataset* val_set,
                  const NetworkSpec& spec, const TrainConfig& config, std::uint64_t seed,
                  RunWriter* run = nullptr, const FeatureSelection* sel = nullptr,
                  bool verbose = false);

// Per-vertex argmax over the two softmax channels, confusion counts pooled
// over all meshes of the split before the ratios are taken. Side-effect free.
MetricsReport evaluate(const Network& net, const Dataset& split, double pos_weight = 3.0,
                       nn::LossKind loss_kind = nn::LossKind::weighted_ce);

struct Prediction {
    VertexLabels labels;
    std::vector<double> probabilities; // positive-channel softmax
};

// Computes features with the given selection, builds whatever ring adjacency
// the network needs, and classifies every vertex. Deterministic.
Prediction predict(const Network& net, const Mesh& mesh, const FeatureSelection& sel);

// Label mode: positives red (1,0,0), everything else gray (0.7,0.7,0.7).
void export_colored_mesh(const Mesh& mesh, const VertexLabels& labels,
                         const std::filesystem::path& path);
// Probability mode: linear blend from gray to red as p goes 0 -> 1.
void export_colored_mesh(const Mesh& mesh, const std::vector<double>& probabilities,
                         const std::filesystem::path& path);

} // namespace meshcnn
