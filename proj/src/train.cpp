#include "meshcnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "meshcnn/errors.hpp"
#include "meshcnn/obj_io.hpp"
#include "meshcnn/rng.hpp"

namespace meshcnn {

MetricsReport MetricsReport::from_counts(std::int64_t tp, std::int64_t tn, std::int64_t fp,
                                         std::int64_t fn, int step, double loss) {
    MetricsReport r;
    r.tp = tp;
    r.tn = tn;
    r.fp = fp;
    r.fn = fn;
    r.step = step;
    r.loss = loss;
    const std::int64_t total = tp + tn + fp + fn;
    r.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    r.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return r;
}

RunWriter::RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    if (!std::filesystem::exists(metrics_csv())) {
        std::ofstream out(metrics_csv());
        out << "step,split,accuracy,precision,recall,loss\n";
    }
}

void RunWriter::write_config(const std::string& json_text) {
    std::ofstream out(dir_ / "config.json");
    if (!out) throw DataError("cannot write run config in " + dir_.string());
    out << json_text << '\n';
}

void RunWriter::append_metrics(const std::string& split, const MetricsReport& report) {
    std::ofstream out(metrics_csv(), std::ios::app);
    if (!out) throw DataError("cannot append to " + metrics_csv().string());
    char line[256];
    std::snprintf(line, sizeof(line), "%d,%s,%.6f,%.6f,%.6f,%.9g\n", report.step,
                  split.c_str(), report.accuracy, report.precision, report.recall,
                  report.loss);
    out << line;
}

void RunWriter::save_last(Network& net, const FeatureSelection& sel) {
    save_checkpoint(net, sel, last_checkpoint());
}

void RunWriter::save_if_best(Network& net, const FeatureSelection& sel, double accuracy) {
    if (accuracy > best_accuracy_) {
        best_accuracy_ = accuracy;
        save_checkpoint(net, sel, best_checkpoint());
    }
}

namespace {

struct EvalAccum {
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    double loss_sum = 0.0;
    int meshes = 0;
};

void accumulate_eval(const Network& net, const DatasetEntry& entry, double pos_weight,
                     nn::LossKind kind, EvalAccum& acc) {
    const Tensor logits = net.forward(entry.features, entry.adjacency.get());
    const int n = logits.dim(1);
    const auto loss = nn::classification_loss(logits, entry.labels.values, pos_weight, kind);
    acc.loss_sum += loss.value;
    acc.meshes += 1;
    for (int i = 0; i < n; ++i) {
        const bool predicted = logits.data[2 * i + 1] > logits.data[2 * i];
        const bool actual = entry.labels.values[i] != 0;
        if (predicted && actual) ++acc.tp;
        else if (predicted && !actual) ++acc.fp;
        else if (!predicted && actual) ++acc.fn;
        else ++acc.tn;
    }
}

} // namespace

MetricsReport evaluate(const Network& net, const Dataset& split, double pos_weight,
                       nn::LossKind loss_kind) {
    EvalAccum acc;
    for (const auto& entry : split.entries()) {
        accumulate_eval(net, entry, pos_weight, loss_kind, acc);
    }
    return MetricsReport::from_counts(acc.tp, acc.tn, acc.fp, acc.fn, 0,
                                      acc.meshes > 0 ? acc.loss_sum / acc.meshes : 0.0);
}

TrainResult train(const Dataset& train_set, const Dataset* val_set,
                  const NetworkSpec& spec, const TrainConfig& config, std::uint64_t seed,
                  RunWriter* run, const FeatureSelection* sel, bool verbose) {
    if (train_set.entries().empty()) {
        throw DataError("train split is empty");
    }
    spec.validate();
    config.schedule.validate();
    for (const auto& entry : train_set.entries()) {
        if (entry.features.dim(2) != spec.input_features) {
            throw DataError("mesh " + entry.id + " has " +
                            std::to_string(entry.features.dim(2)) +
                            " features but the network expects " +
                            std::to_string(spec.input_features));
        }
    }

    Network net = Network::instantiate(spec, seed);
    const FeatureSelection selection = sel ? *sel : FeatureSelection{};

    Rng shuffle_rng(seed ^ 0x5deece66dULL);
    std::vector<int> order(train_set.entries().size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size(); // forces a shuffle before the first step

    TrainResult result{std::move(net), {}};
    double window_loss = 0.0;
    int window_count = 0;

    const int total = config.schedule.total_steps;
    for (int step = 0; step < total; ++step) {
        if (cursor >= order.size()) {
            shuffle_rng.shuffle(order);
            cursor = 0;
        }
        const DatasetEntry& entry = train_set.entries()[order[cursor++]];

        const auto trace =
            result.net.forward_trace(entry.features, entry.adjacency.get());
        const auto loss = nn::classification_loss(
            trace.output, entry.labels.values, config.schedule.pos_weight,
            config.loss_kind);
        if (!std::isfinite(loss.value)) {
            throw NumericError("non-finite training loss at step " + std::to_string(step) +
                               " on mesh " + entry.id);
        }
        result.net.zero_grads();
        result.net.backward(trace, loss.d_logits, entry.adjacency.get());
        nn::sgd_step(result.net.param_blocks(), config.schedule, step);

        window_loss += loss.value;
        ++window_count;

        const int done = step + 1;
        const bool at_eval = config.eval_every > 0 && done % config.eval_every == 0;
        const bool end_needs_eval =
            done == total && !at_eval; // step count not a multiple of eval_every
        if ((at_eval || end_needs_eval) && val_set && !val_set->entries().empty()) {
            MetricsReport report =
                evaluate(result.net, *val_set, config.schedule.pos_weight, config.loss_kind);
            report.step = done;
            result.history.push_back(report);
            if (verbose) {
                std::fprintf(stderr,
                             "step %6d  train-loss %.5f  val acc %.4f prec %.4f rec %.4f\n",
                             done, window_count ? window_loss / window_count : 0.0,
                             report.accuracy, report.precision, report.recall);
            }
            window_loss = 0.0;
            window_count = 0;
            if (run) {
                run->append_metrics("val", report);
                run->save_last(result.net, selection);
                run->save_if_best(result.net, selection, report.accuracy);
            }
        }
    }
    if (run) {
        run->save_last(result.net, selection);
        if (!val_set || val_set->entries().empty()) {
            run->save_if_best(result.net, selection, 0.0);
        }
    }
    return result;
}

Prediction predict(const Network& net, const Mesh& mesh, const FeatureSelection& sel) {
    FeatureMatrix fm = assemble_features(mesh, sel);
    if (fm.cols != net.input_features()) {
        throw DataError("feature selection yields " + std::to_string(fm.cols) +
                        " features but the checkpoint was trained with " +
                        std::to_string(net.input_features()));
    }
    Tensor x = Tensor::zeros({1, fm.rows, fm.cols});
    x.data = std::move(fm.data);

    const std::vector<int> rings = required_rings(net.spec());
    std::unique_ptr<RingAdjacency> adj;
    if (!rings.empty()) {
        adj = std::make_unique<RingAdjacency>(mesh, rings);
    }

    const Tensor logits = net.forward(x, adj.get());
    const Tensor probs = nn::softmax_rows(logits);
    Prediction out;
    const int n = logits.dim(1);
    out.labels.values.resize(n);
    out.probabilities.resize(n);
    for (int i = 0; i < n; ++i) {
        out.probabilities[i] = probs.data[2 * i + 1];
        out.labels.values[i] = probs.data[2 * i + 1] > probs.data[2 * i] ? 1 : 0;
    }
    return out;
}

namespace {

constexpr Color kRed{1.0, 0.0, 0.0};
constexpr Color kGray{0.7, 0.7, 0.7};

} // namespace

void export_colored_mesh(const Mesh& mesh, const VertexLabels& labels,
                         const std::filesystem::path& path) {
    if (labels.size() != static_cast<std::size_t>(mesh.vertex_count())) {
        throw DataError("label count does not match mesh vertex count");
    }
    std::vector<Color> colors(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        colors[i] = labels.values[i] ? kRed : kGray;
    }
    write_obj(Mesh(mesh.vertices(), mesh.faces(), std::move(colors)), path);
}

void export_colored_mesh(const Mesh& mesh, const std::vector<double>& probabilities,
                         const std::filesystem::path& path) {
    if (probabilities.size() != static_cast<std::size_t>(mesh.vertex_count())) {
        throw DataError("probability count does not match mesh vertex count");
    }
    std::vector<Color> colors(probabilities.size());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = std::clamp(probabilities[i], 0.0, 1.0);
        colors[i] = {kGray.r + p * (kRed.r - kGray.r), kGray.g + p * (kRed.g - kGray.g),
                     kGray.b + p * (kRed.b - kGray.b)};
    }
    write_obj(Mesh(mesh.vertices(), mesh.faces(), std::move(colors)), path);
}

} // namespace meshcnn
