// Command-line front end for the mesh vertex classifier: synthetic data
// generation, mesh inspection, feature export, training, evaluation and
// prediction. Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshcnn/dataset.hpp"
#include "meshcnn/errors.hpp"
#include "meshcnn/network.hpp"
#include "meshcnn/obj_io.hpp"
#include "meshcnn/rings.hpp"
#include "meshcnn/synth.hpp"
#include "meshcnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meshcnn;

namespace {

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("bad JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataArgs {
    std::string config_path;
    std::string out_dir;
    // -1 / NaN mean "not set on the command line"
    std::int64_t seed = -1;
    std::string family;
    int budget = -1;
    int ridge_width = -1;
    double noise = -1.0;
    int creases = -1;
    int bumps = -1;
    int train_count = -1, val_count = -1, test_count = -1;
};

int run_gen_data(const GenDataArgs& args) {
    synth::SynthConfig cfg;
    synth::SplitCounts counts;
    if (!args.config_path.empty()) {
        const json j = load_json_file(args.config_path);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("family")) {
            cfg.family = synth::family_from_string(j["family"].get<std::string>());
        }
        cfg.vertex_budget = j.value("vertex_budget", cfg.vertex_budget);
        cfg.ridge_width = j.value("ridge_width", cfg.ridge_width);
        cfg.noise_amplitude = j.value("noise_amplitude", cfg.noise_amplitude);
        cfg.crease_count = j.value("crease_count", cfg.crease_count);
        cfg.bump_count = j.value("bump_count", cfg.bump_count);
        if (j.contains("counts")) {
            counts.train = j["counts"].value("train", counts.train);
            counts.val = j["counts"].value("val", counts.val);
            counts.test = j["counts"].value("test", counts.test);
        }
    }
    // command-line flags win over the config file
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.family.empty()) cfg.family = synth::family_from_string(args.family);
    if (args.budget >= 0) cfg.vertex_budget = args.budget;
    if (args.ridge_width >= 0) cfg.ridge_width = args.ridge_width;
    if (args.noise >= 0.0) cfg.noise_amplitude = args.noise;
    if (args.creases >= 0) cfg.crease_count = args.creases;
    if (args.bumps >= 0) cfg.bump_count = args.bumps;
    if (args.train_count >= 0) counts.train = args.train_count;
    if (args.val_count >= 0) counts.val = args.val_count;
    if (args.test_count >= 0) counts.test = args.test_count;

    synth::write_dataset(cfg, counts, args.out_dir);
    std::printf("wrote %d train / %d val / %d test meshes to %s\n", counts.train,
                counts.val, counts.test, args.out_dir.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

int run_inspect(const std::string& mesh_path) {
    const Mesh mesh = load_obj(mesh_path);
    std::printf("%s\n", mesh_path.c_str());
    std::printf("  vertices: %d\n", mesh.vertex_count());
    std::printf("  faces:    %zu\n", mesh.faces().size());
    std::printf("  edges:    %zu\n", mesh.edges().size());
    if (mesh.has_colors()) {
        const VertexLabels labels = labels_from_colors(mesh);
        const int pos = labels.positive_count();
        std::printf("  labels:   %d positive / %d (%.3f)\n", pos, mesh.vertex_count(),
                    mesh.vertex_count() ? static_cast<double>(pos) / mesh.vertex_count()
                                        : 0.0);
    } else {
        std::printf("  labels:   none (no vertex colors)\n");
    }

    const std::vector<int> ks = {1, 2, 4, 8};
    const RingAdjacency adj(mesh, ks);
    const int buckets[] = {0, 1, 3, 5, 9, 17, 33};
    std::printf("  ring-size histogram (bucket lower bounds 0/1/3/5/9/17/33):\n");
    for (int s = 0; s < adj.slot_count(); ++s) {
        std::int64_t counts[7] = {0};
        std::int64_t total = 0;
        std::int64_t min_size = -1, max_size = 0;
        for (int v = 0; v < adj.vertex_count(); ++v) {
            const std::int64_t size = adj.row_size(s, v);
            total += size;
            if (min_size < 0 || size < min_size) min_size = size;
            max_size = std::max(max_size, size);
            int b = 0;
            for (int i = 6; i >= 0; --i) {
                if (size >= buckets[i]) {
                    b = i;
                    break;
                }
            }
            ++counts[b];
        }
        std::printf("    k=%d: min %lld mean %.1f max %lld |", ks[s],
                    static_cast<long long>(min_size < 0 ? 0 : min_size),
                    adj.vertex_count() ? static_cast<double>(total) / adj.vertex_count()
                                       : 0.0,
                    static_cast<long long>(max_size));
        for (long long c : counts) std::printf(" %lld", c);
        std::printf("\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

int run_features(const std::string& mesh_path, const std::string& select,
                 const std::string& out_csv) {
    const Mesh mesh = load_obj(mesh_path);
    const FeatureSelection sel = FeatureSelection::parse(select);
    const FeatureMatrix fm = assemble_features(mesh, sel);
    if (mesh.has_colors()) {
        const VertexLabels labels = labels_from_colors(mesh);
        write_features_csv(fm, &labels, out_csv);
    } else {
        std::fprintf(stderr, "note: mesh has no colors; label column omitted\n");
        write_features_csv(fm, nullptr, out_csv);
    }
    std::printf("wrote %d rows x %d features to %s\n", fm.rows, fm.cols, out_csv.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data_dir;
    std::string arch = "d";
    std::string arch_file;
    std::string features = "curv+dist";
    std::string out_dir;
    std::uint64_t seed = 1;
    int steps = 11500;
    int eval_every = 500;
    double lr = 0.01;
    double pos_weight = 3.0;
    bool literal_loss = false;
    bool no_cache = false;
};

json schedule_to_json(const nn::SgdSchedule& s) {
    json j;
    j["initial_lr"] = s.initial_lr;
    j["drops"] = json::array();
    for (const auto& [step, rate] : s.drops) j["drops"].push_back({step, rate});
    j["total_steps"] = s.total_steps;
    j["pos_weight"] = s.pos_weight;
    return j;
}

int run_train(const TrainArgs& args) {
    const FeatureSelection sel = FeatureSelection::parse(args.features);

    NetworkSpec spec;
    if (!args.arch_file.empty()) {
        std::ifstream in(args.arch_file);
        if (!in) throw DataError("cannot open arch file: " + args.arch_file);
        std::ostringstream buf;
        buf << in.rdbuf();
        spec = NetworkSpec::from_json(buf.str());
        if (spec.input_features == 0) spec.input_features = sel.column_count();
        if (spec.input_features != sel.column_count()) {
            throw UsageError("arch file expects " + std::to_string(spec.input_features) +
                             " input features but selection '" + sel.to_string() +
                             "' yields " + std::to_string(sel.column_count()));
        }
        spec.validate();
    } else {
        spec = preset(args.arch, sel.column_count());
    }

    TrainConfig config;
    config.schedule.initial_lr = args.lr;
    config.schedule.total_steps = args.steps;
    config.schedule.pos_weight = args.pos_weight;
    config.eval_every = args.eval_every;
    config.loss_kind = args.literal_loss ? nn::LossKind::paper_literal
                                         : nn::LossKind::weighted_ce;
    config.schedule.validate();

    const std::vector<int> rings = required_rings(spec);
    const Dataset train_set =
        Dataset::load(args.data_dir, "train", sel, rings, !args.no_cache);
    const Dataset val_set = Dataset::load(args.data_dir, "val", sel, rings, !args.no_cache);
    std::printf("train: %d meshes (%.3f positive)  val: %d meshes\n", train_set.size(),
                train_set.positive_fraction(), val_set.size());
    std::printf("network %s, %d input features, schedule lr %.4g", spec.name.c_str(),
                spec.input_features, config.schedule.initial_lr);
    for (const auto& [step, rate] : config.schedule.drops) {
        std::printf(" -> %.4g@%d", rate, step);
    }
    std::printf(", %d steps\n", config.schedule.total_steps);

    RunWriter run(args.out_dir);
    json cfg;
    cfg["data_dir"] = args.data_dir;
    cfg["spec"] = json::parse(spec.to_json());
    cfg["features"] = sel.to_string();
    cfg["seed"] = args.seed;
    cfg["eval_every"] = config.eval_every;
    cfg["loss"] = args.literal_loss ? "paper_literal" : "weighted_ce";
    cfg["schedule"] = schedule_to_json(config.schedule);
    run.write_config(cfg.dump(2));

    const TrainResult result =
        train(train_set, &val_set, spec, config, args.seed, &run, &sel, true);
    if (!result.history.empty()) {
        const MetricsReport& last = result.history.back();
        std::printf("final val: accuracy %.3f precision %.3f recall %.3f\n", last.accuracy,
                    last.precision, last.recall);
    }
    std::printf("run directory: %s\n", args.out_dir.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int run_eval(const std::string& run_dir, const std::string& split,
             const std::string& data_override, bool use_last) {
    const fs::path dir(run_dir);
    const json cfg = load_json_file(dir / "config.json");
    const std::string data_dir =
        data_override.empty() ? cfg.at("data_dir").get<std::string>() : data_override;
    const double pos_weight = cfg.contains("schedule")
                                  ? cfg["schedule"].value("pos_weight", 3.0)
                                  : 3.0;
    const nn::LossKind kind = cfg.value("loss", "weighted_ce") == "paper_literal"
                                  ? nn::LossKind::paper_literal
                                  : nn::LossKind::weighted_ce;

    const fs::path ckpt_path =
        dir / (use_last ? "checkpoint_last.json" : "checkpoint_best.json");
    Checkpoint ckpt = load_checkpoint(ckpt_path);

    const std::vector<int> rings = required_rings(ckpt.net.spec());
    const Dataset ds = Dataset::load(data_dir, split, ckpt.selection, rings);

    MetricsReport report = evaluate(ckpt.net, ds, pos_weight, kind);
    report.step = cfg.contains("schedule") ? cfg["schedule"].value("total_steps", 0) : 0;
    std::printf("%s on %s: accuracy %.3f precision %.3f recall %.3f "
                "(tp %lld tn %lld fp %lld fn %lld, loss %.5f)\n",
                ckpt_path.filename().string().c_str(), split.c_str(), report.accuracy,
                report.precision, report.recall, static_cast<long long>(report.tp),
                static_cast<long long>(report.tn), static_cast<long long>(report.fp),
                static_cast<long long>(report.fn), report.loss);
    RunWriter run(dir);
    run.append_metrics(split, report);
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int run_predict(const std::string& run_dir, const std::string& mesh_path,
                const std::string& out_path, bool prob_mode, bool use_last) {
    const fs::path dir(run_dir);
    const fs::path ckpt_path =
        dir / (use_last ? "checkpoint_last.json" : "checkpoint_best.json");
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Mesh mesh = load_obj(mesh_path);
    const Prediction pred = predict(ckpt.net, mesh, ckpt.selection);
    if (prob_mode) {
        export_colored_mesh(mesh, pred.probabilities, out_path);
    } else {
        export_colored_mesh(mesh, pred.labels, out_path);
    }
    const int pos = pred.labels.positive_count();
    std::printf("predicted %d positive / %d vertices (%.3f); wrote %s\n", pos,
                mesh.vertex_count(),
                mesh.vertex_count() ? static_cast<double>(pos) / mesh.vertex_count() : 0.0,
                out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ring-expansion convolutional networks for per-vertex mesh labeling"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a labeled synthetic dataset");
    gen_cmd->add_option("--config", gen.config_path, "JSON config file");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "master seed");
    gen_cmd->add_option("--family", gen.family, "bumpy_sphere | ridged_heightfield");
    gen_cmd->add_option("--budget", gen.budget, "vertex budget per mesh (<= 6000)");
    gen_cmd->add_option("--ridge-width", gen.ridge_width, "label band half-width");
    gen_cmd->add_option("--noise", gen.noise, "jitter amplitude in [0, 0.45]");
    gen_cmd->add_option("--creases", gen.creases, "crease count (heightfield)");
    gen_cmd->add_option("--bumps", gen.bumps, "bump count (sphere)");
    gen_cmd->add_option("--train", gen.train_count, "train mesh count");
    gen_cmd->add_option("--val", gen.val_count, "validation mesh count");
    gen_cmd->add_option("--test", gen.test_count, "test mesh count");

    std::string inspect_mesh;
    auto* inspect_cmd = app.add_subcommand("inspect", "report mesh statistics");
    inspect_cmd->add_option("mesh", inspect_mesh, "OBJ file")->required();

    std::string feat_mesh, feat_select = "curv+dist", feat_out;
    auto* feat_cmd = app.add_subcommand("features", "export per-vertex features as CSV");
    feat_cmd->add_option("mesh", feat_mesh, "OBJ file")->required();
    feat_cmd->add_option("--select", feat_select, "coords|curv|dist|all combos with +");
    feat_cmd->add_option("--out", feat_out, "output CSV path")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a network on a dataset");
    train_cmd->add_option("--data", train_args.data_dir, "dataset directory")->required();
    train_cmd->add_option("--arch", train_args.arch, "baseline|a|b|c|d|e");
    train_cmd->add_option("--arch-file", train_args.arch_file, "custom spec JSON");
    train_cmd->add_option("--features", train_args.features, "feature selection");
    train_cmd->add_option("--seed", train_args.seed, "training seed");
    train_cmd->add_option("--steps", train_args.steps, "total training steps");
    train_cmd->add_option("--eval-every", train_args.eval_every, "validation interval");
    train_cmd->add_option("--lr", train_args.lr, "initial learning rate");
    train_cmd->add_option("--pos-weight", train_args.pos_weight, "positive class weight");
    train_cmd->add_flag("--literal-loss", train_args.literal_loss,
                        "use the unlogged second-term loss variant");
    train_cmd->add_flag("--no-cache", train_args.no_cache, "skip feature caches");
    train_cmd->add_option("--out", train_args.out_dir, "run directory")->required();

    std::string eval_run, eval_split = "test", eval_data;
    bool eval_last = false;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained run on a split");
    eval_cmd->add_option("--run", eval_run, "run directory")->required();
    eval_cmd->add_option("--split", eval_split, "train|val|test");
    eval_cmd->add_option("--data", eval_data, "override dataset directory");
    eval_cmd->add_flag("--last", eval_last, "use the last checkpoint instead of the best");

    std::string pred_run, pred_mesh, pred_out;
    bool pred_prob = false, pred_last = false;
    auto* pred_cmd = app.add_subcommand("predict", "label a mesh with a trained network");
    pred_cmd->add_option("--run", pred_run, "run directory")->required();
    pred_cmd->add_option("mesh", pred_mesh, "OBJ file")->required();
    pred_cmd->add_option("--out", pred_out, "output OBJ path")->required();
    pred_cmd->add_flag("--prob", pred_prob, "color by probability instead of label");
    pred_cmd->add_flag("--last", pred_last, "use the last checkpoint instead of the best");

    try {
        app.parse(argc, argv);
        if (gen_cmd->parsed()) return run_gen_data(gen);
        if (inspect_cmd->parsed()) return run_inspect(inspect_mesh);
        if (feat_cmd->parsed()) return run_features(feat_mesh, feat_select, feat_out);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_run, eval_split, eval_data, eval_last);
        if (pred_cmd->parsed()) {
            return run_predict(pred_run, pred_mesh, pred_out, pred_prob, pred_last);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
