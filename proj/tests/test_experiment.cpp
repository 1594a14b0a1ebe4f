#include <filesystem>
#include <map>
#include <fstream>

#include "doctest.h"
#include "qcgan/experiment.hpp"

using namespace qcgan;
using namespace qcgan::experiment;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qcgan_exp_" + std::to_string(Rng(std::random_device{}())()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

nlohmann::json tiny_config(const std::string& out_dir) {
  return {
      {"version", 1},
      {"seed", 21},
      {"out_dir", out_dir},
      {"data",
       {{"source", "synthetic"},
        {"synthetic", {{"rows", 600}, {"train_frac", 0.6}, {"val_frac", 0.2}}}}},
      {"features", {{"mode", "fixed"}, {"fixed", {"f0", "f1", "f2", "f3"}}}},
      {"train",
       {{"generator", "classical"},
        {"epochs", 2},
        {"batch_size", 16},
        {"n_critic", 2},
        {"val_samples", 32}}},
      {"metrics", {{"batch_rows", 64}, {"mmd_max_rows", 64}}},
      {"ids",
       {{"train_per_class", 64},
        {"eval_per_side", 64},
        {"rf", {{"n_trees", 10}, {"max_depth", 6}}},
        {"boost", {{"rounds", 15}, {"max_depth", 2}, {"lambda", 1.0}, {"learning_rate", 0.1}}},
        {"cnn", {{"epochs", 5}, {"batch_size", 16}, {"channels", 8}, {"kernel", 2}, {"lr", 0.005}}}}},
      {"report", {{"generated_rows", 128}}}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config parsing rejects unknown keys with their path") {
  auto j = tiny_config("out");
  j["data"]["sorce"] = "synthetic";  // typo
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(j), doctest::Contains("data/sorce"),
                       ConfigError);
  j = tiny_config("out");
  j["extra_top_level"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_config("out");
  j["train"]["generator"] = "diffusion";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_config("out");
  j["version"] = 2;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
}

TEST_CASE("circuit presets resolve to the documented parameter counts") {
  auto j = tiny_config("out");
  j["circuit"] = {{"preset", "compact16"}};
  const auto cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.train.circuit.param_count() == 16);
  const auto cfg_default = ExperimentConfig::from_json(tiny_config("out"));
  CHECK(cfg_default.train.circuit.param_count() == 48);
}

TEST_CASE("prepare is deterministic: identical bytes across two runs") {
  TempDir tmp;
  const auto cfg = ExperimentConfig::from_json(tiny_config(tmp.file("a")));
  cmd_prepare(cfg);
  std::map<std::string, std::string> first;
  for (const char* name : {"train.csv", "val.csv", "test.csv", "sidecar.json"})
    first[name] = read_file(tmp.file("a") + "/prepared/" + std::string(name));
  cmd_prepare(cfg);
  for (const auto& [name, bytes] : first)
    CHECK(read_file(tmp.file("a") + "/prepared/" + name) == bytes);

  // the data files do not depend on where the experiment writes
  const auto cfg_b = ExperimentConfig::from_json(tiny_config(tmp.file("b")));
  cmd_prepare(cfg_b);
  for (const char* name : {"train.csv", "val.csv", "test.csv"})
    CHECK(read_file(tmp.file("b") + "/prepared/" + std::string(name)) == first[name]);
}

TEST_CASE("prepare emits transformed splits inside [-1, 1] plus a sidecar") {
  TempDir tmp;
  const auto cfg = ExperimentConfig::from_json(tiny_config(tmp.file("run")));
  cmd_prepare(cfg);
  const auto sidecar = nlohmann::json::parse(
      read_file(tmp.file("run") + "/prepared/sidecar.json"));
  CHECK(sidecar.at("format_version") == 1);
  CHECK(sidecar.at("selected_features").size() == 4);
  CHECK(sidecar.at("row_counts").at("train") == 360);
  CHECK(sidecar.at("row_counts").at("val") == 120);
  CHECK(sidecar.at("row_counts").at("test") == 120);

  const auto train = datapipe::load_csv({tmp.file("run") + "/prepared/train.csv"});
  for (const auto& col : train.columns)
    for (double v : col) {
      CHECK(v <= 1.0);
      CHECK(v >= -1.0);
    }
}

TEST_CASE("prepare with feature selection picks 4 of the stage-1 top-8") {
  TempDir tmp;
  auto j = tiny_config(tmp.file("sel"));
  j["features"] = {{"mode", "select"},
                   {"stage1", {{"rf_trees", 10}, {"top_k", 6}}}};
  j["data"]["synthetic"]["spec"] = datapipe::SyntheticSpec::separable(2.0).to_json();
  j["data"]["synthetic"]["spec"]["nuisance_features"] = 3;
  const auto cfg = ExperimentConfig::from_json(j);
  cmd_prepare(cfg);
  const auto sidecar = nlohmann::json::parse(
      read_file(tmp.file("sel") + "/prepared/sidecar.json"));
  CHECK(sidecar.at("selected_features").size() == 4);
  CHECK(sidecar.contains("feature_scores"));
}

TEST_CASE("prepare fails with a usable message when a fixed feature is missing") {
  TempDir tmp;
  auto j = tiny_config(tmp.file("bad"));
  j["features"]["fixed"] = {"f0", "f1", "f2", "not_a_feature"};
  const auto cfg = ExperimentConfig::from_json(j);
  CHECK_THROWS_WITH_AS(cmd_prepare(cfg), doctest::Contains("not_a_feature"), DataError);
}

TEST_CASE("train writes a checkpoint, trace and summary; rerun is identical") {
  TempDir tmp;
  const auto cfg = ExperimentConfig::from_json(tiny_config(tmp.file("t")));
  cmd_prepare(cfg);
  cmd_train(cfg, gan::GeneratorKind::Classical);
  const std::string dir = tmp.file("t") + "/runs/classical";
  CHECK(fs::exists(dir + "/checkpoint.json"));
  CHECK(fs::exists(dir + "/final.json"));
  CHECK(fs::exists(dir + "/trace.csv"));

  const std::string trace = read_file(dir + "/trace.csv");
  CHECK(trace.find("epoch,d_loss,g_loss,val_mmd,min_feature_std") == 0);
  // 2 epochs -> header + 2 rows
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 3);

  const std::string checkpoint_before = read_file(dir + "/checkpoint.json");
  cmd_train(cfg, gan::GeneratorKind::Classical);
  CHECK(read_file(dir + "/checkpoint.json") == checkpoint_before);
}

TEST_CASE("generate writes the requested number of attack-labelled rows") {
  TempDir tmp;
  const auto cfg = ExperimentConfig::from_json(tiny_config(tmp.file("g")));
  cmd_prepare(cfg);
  cmd_train(cfg, gan::GeneratorKind::Classical);
  const std::string out_csv = tmp.file("g") + "/generated.csv";
  cmd_generate(cfg, tmp.file("g") + "/runs/classical/checkpoint.json", 37, out_csv);
  const auto rows = datapipe::load_csv({out_csv});
  CHECK(rows.rows() == 37);
  for (int label : rows.labels) CHECK(label == 1);
  CHECK(rows.feature_names == std::vector<std::string>{"f0", "f1", "f2", "f3"});
}

TEST_CASE("report emits consolidated JSON and the paper-layout CSV tables") {
  TempDir tmp;
  const auto cfg = ExperimentConfig::from_json(tiny_config(tmp.file("r")));
  cmd_prepare(cfg);
  cmd_train(cfg, gan::GeneratorKind::Classical);
  cmd_report(cfg, {tmp.file("r") + "/runs/classical/checkpoint.json"});

  const std::string rdir = tmp.file("r") + "/report";
  const auto report = nlohmann::json::parse(read_file(rdir + "/report.json"));
  CHECK(report.at("format_version") == 1);
  REQUIRE(report.at("models").size() == 1);
  const auto& model = report.at("models")[0];
  CHECK(model.at("metrics").contains("mmd"));
  CHECK(model.at("evasion").size() == 3);
  for (const auto& row : model.at("evasion")) {
    const double dr = row.at("dr").get<double>();
    const double asr = row.at("asr").get<double>();
    CHECK(asr == 1.0 - dr);  // exact
    const double tp = row.at("tp").get<double>(), fp = row.at("fp").get<double>(),
                 fn = row.at("fn").get<double>();
    const double f1 = tp > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
    CHECK(row.at("f1").get<double>() == doctest::Approx(f1).epsilon(1e-12));
  }

  const std::string metrics_csv = read_file(rdir + "/metrics_table.csv");
  CHECK(metrics_csv.find("model,params,mmd,mse,wd_mean,wd_std,kl_mean,kl_std") == 0);
  const std::string evasion_csv = read_file(rdir + "/evasion_table.csv");
  CHECK(evasion_csv.find("model,ids,dr,asr,f1") == 0);
  CHECK(fs::exists(rdir + "/histograms.csv"));
  CHECK(fs::exists(rdir + "/models/rf.json"));

  // byte-identical rerun
  const std::string before = read_file(rdir + "/report.json");
  cmd_report(cfg, {tmp.file("r") + "/runs/classical/checkpoint.json"});
  CHECK(read_file(rdir + "/report.json") == before);
}

TEST_CASE("artifacts carry the config hash and seed") {
  TempDir tmp;
  const auto cfg = ExperimentConfig::from_json(tiny_config(tmp.file("h")));
  CHECK(cfg.config_hash != 0);
  cmd_prepare(cfg);
  cmd_train(cfg, gan::GeneratorKind::Classical);
  const auto sidecar = nlohmann::json::parse(
      read_file(tmp.file("h") + "/prepared/sidecar.json"));
  CHECK(sidecar.at("config_hash").get<std::uint64_t>() == cfg.config_hash);
  CHECK(sidecar.at("seed").get<std::uint64_t>() == cfg.seed);
  const auto checkpoint = nlohmann::json::parse(
      read_file(tmp.file("h") + "/runs/classical/checkpoint.json"));
  CHECK(checkpoint.at("config_hash").get<std::uint64_t>() == cfg.config_hash);
}

TEST_CASE("selftest passes") { CHECK(selftest() == 0); }

}  // TEST_SUITE
