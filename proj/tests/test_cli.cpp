// Drives the built command-line binary end to end through std::system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "meshcnn/network.hpp"
#include "meshcnn/obj_io.hpp"
#include "meshcnn/synth.hpp"
#include "meshcnn/train.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace meshcnn;

namespace {

const std::string kCli = MESHCNN_CLI_PATH;

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    const fs::path capture = fs::temp_directory_path() / "meshcnn_cli_capture.txt";
    const std::string cmd = kCli + " " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(capture);
    std::ostringstream buf;
    buf << in.rdbuf();
    fs::remove(capture);
    int code = -1;
    if (WIFEXITED(status)) code = WEXITSTATUS(status);
    return {code, buf.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("inspect reports counts for a tetrahedron") {
    TempDir tmp("meshcnn_cli_inspect");
    const fs::path obj = tmp.path / "tet.obj";
    write_obj(oracle::tetrahedron(), obj);

    const auto r = run_cli("inspect " + obj.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("vertices: 4") != std::string::npos);
    CHECK(r.output.find("faces:    4") != std::string::npos);
    CHECK(r.output.find("edges:    6") != std::string::npos);
}

TEST_CASE("exit codes: usage, data and missing-file errors") {
    CHECK(run_cli("bogus-subcommand").exit_code == 1);
    CHECK(run_cli("train --data /nonexistent --out /tmp/meshcnn_x --steps 1").exit_code == 2);
    CHECK(run_cli("inspect /nonexistent/mesh.obj").exit_code == 2);
    CHECK(run_cli("train --data /nonexistent --arch nope --out /tmp/meshcnn_x").exit_code ==
          1);
    CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("full pipeline: gen-data, features, train, eval, predict, inspect") {
    TempDir tmp("meshcnn_cli_pipe");
    const fs::path data_dir = tmp.path / "data";
    const fs::path run_dir = tmp.path / "run";

    auto gen = run_cli("gen-data --out " + data_dir.string() +
                       " --seed 9 --budget 220 --creases 2 --train 4 --val 2 --test 2");
    REQUIRE(gen.exit_code == 0);
    CHECK(fs::exists(data_dir / "manifest.json"));
    CHECK(fs::exists(data_dir / "train_0003.obj"));

    auto feat = run_cli("features " + (data_dir / "train_0000.obj").string() +
                        " --select curv+dist --out " + (tmp.path / "f.csv").string());
    REQUIRE(feat.exit_code == 0);
    {
        std::ifstream csv(tmp.path / "f.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == "k_max,k_min,k_mean,k_gauss,d,label");
        int rows = 0;
        std::string line;
        while (std::getline(csv, line)) ++rows;
        const Mesh m0 = load_obj(data_dir / "train_0000.obj");
        CHECK(rows == m0.vertex_count());
    }

    // custom shallow architecture file
    const fs::path arch = tmp.path / "arch.json";
    {
        std::ofstream out(arch);
        out << R"({"name":"Custom","layers":[
            {"kind":"expand_conv","rings":[0,1,2],"out_channels":16,"repeat":1},
            {"kind":"expand_conv","rings":[0,1,2],"out_channels":2,"repeat":1}]})";
    }
    auto train_run = run_cli("train --data " + data_dir.string() + " --arch-file " +
                             arch.string() + " --steps 120 --eval-every 40 --seed 3 --out " +
                             run_dir.string());
    REQUIRE(train_run.exit_code == 0);
    CHECK(fs::exists(run_dir / "config.json"));
    CHECK(fs::exists(run_dir / "checkpoint_best.json"));
    CHECK(fs::exists(run_dir / "metrics.csv"));

    auto eval_run = run_cli("eval --run " + run_dir.string() + " --split test");
    REQUIRE(eval_run.exit_code == 0);
    CHECK(eval_run.output.find("accuracy") != std::string::npos);

    const fs::path pred_obj = tmp.path / "pred.obj";
    auto pred = run_cli("predict --run " + run_dir.string() + " " +
                        (data_dir / "test_0000.obj").string() + " --out " +
                        pred_obj.string());
    REQUIRE(pred.exit_code == 0);
    REQUIRE(fs::exists(pred_obj));

    // the predicted positive count printed must match what inspect re-ingests
    std::size_t pos_pos = pred.output.find("predicted ");
    REQUIRE(pos_pos != std::string::npos);
    const int claimed = std::stoi(pred.output.substr(pos_pos + 10));
    auto inspect = run_cli("inspect " + pred_obj.string());
    REQUIRE(inspect.exit_code == 0);
    std::size_t label_pos = inspect.output.find("labels:   ");
    REQUIRE(label_pos != std::string::npos);
    const int reingested = std::stoi(inspect.output.substr(label_pos + 10));
    CHECK(claimed == reingested);

    // determinism: identical flags give identical checkpoints
    const fs::path run_dir2 = tmp.path / "run2";
    auto train_run2 = run_cli("train --data " + data_dir.string() + " --arch-file " +
                              arch.string() + " --steps 120 --eval-every 40 --seed 3 --out " +
                              run_dir2.string());
    REQUIRE(train_run2.exit_code == 0);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    CHECK(slurp(run_dir / "checkpoint_last.json") ==
          slurp(run_dir2 / "checkpoint_last.json"));
}

TEST_CASE("eval prints perfect scores for a hand-built perfect classifier") {
    TempDir tmp("meshcnn_cli_oracle");
    const fs::path data_dir = tmp.path / "data";
    fs::create_directories(data_dir);

    // Build a tiny dataset whose labels equal (d feature > 0 after z-score):
    // generate meshes, compute the distance feature exactly as the pipeline
    // will, and color vertices red accordingly.
    const FeatureSelection sel{false, false, true};
    nlohmann::json manifest;
    for (int i = 0; i < 3; ++i) {
        synth::SynthConfig cfg;
        cfg.seed = 100 + i;
        cfg.vertex_budget = 150;
        const synth::SynthResult r = synth::generate(cfg);
        const Mesh plain(r.mesh.vertices(), r.mesh.faces());
        const FeatureMatrix fm = assemble_features(plain, sel);
        VertexLabels labels;
        labels.values.resize(fm.rows);
        for (int v = 0; v < fm.rows; ++v) labels.values[v] = fm.at(v, 0) > 0.0 ? 1 : 0;
        char name[32];
        std::snprintf(name, sizeof(name), "test_%04d.obj", i);
        export_colored_mesh(plain, labels, data_dir / name);
        manifest["splits"]["test"].push_back({{"file", name}, {"seed", cfg.seed}});
    }
    manifest["splits"]["train"] = nlohmann::json::array();
    manifest["splits"]["val"] = nlohmann::json::array();
    {
        std::ofstream out(data_dir / "manifest.json");
        out << manifest.dump();
    }

    // Hand-built classifier: logit_pos = 8 * d, so argmax equals (d > 0).
    NetworkSpec spec;
    spec.name = "Custom";
    spec.input_features = 1;
    LayerSpec l;
    l.kind = LayerKind::conv_only;
    l.out_channels = 2;
    spec.layers.push_back(l);
    Network net = Network::instantiate(spec, 0);
    auto blocks = net.param_blocks();
    blocks[0].value->data = {0.0, 8.0}; // kernel {1,1,1,2}
    blocks[1].value->data = {0.0, 0.0};

    const fs::path run_dir = tmp.path / "run";
    fs::create_directories(run_dir);
    save_checkpoint(net, sel, run_dir / "checkpoint_best.json");
    {
        std::ofstream out(run_dir / "config.json");
        out << nlohmann::json{{"data_dir", data_dir.string()},
                              {"loss", "weighted_ce"},
                              {"schedule", {{"pos_weight", 3.0}, {"total_steps", 0}}}}
                   .dump();
    }

    auto r = run_cli("eval --run " + run_dir.string() + " --split test");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("accuracy 1.000") != std::string::npos);
    CHECK(r.output.find("precision 1.000") != std::string::npos);
    CHECK(r.output.find("recall 1.000") != std::string::npos);
}
