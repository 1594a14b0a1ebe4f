#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qcgan/experiment.hpp"

// qcgan CLI: prepare | train | generate | report | selftest
//
// Exit codes: 0 success, 1 usage, 2 configuration error, 3 data error,
// 4 runtime failure.

namespace {

using qcgan::experiment::ExperimentConfig;

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                             std::optional<std::string> out_dir) {
  ExperimentConfig config = ExperimentConfig::load(path);
  if (seed) {
    config.seed = *seed;
    config.train.seed = *seed;
    config.metric_cfg.seed = *seed;
    config.features.stage1.seed = *seed;
    config.ids_cfg.rf.seed = *seed;
    config.ids_cfg.cnn.seed = *seed;
  }
  if (out_dir) config.out_dir = *out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical GAN lab for IDS-evasion experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string model = "";
  std::string checkpoint_path;
  std::vector<std::string> checkpoint_paths;
  std::size_t rows = 1000;
  std::string gen_out = "generated.csv";

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "experiment config JSON");
    if (needs_config) opt->required();
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out_dir, "override the output directory");
  };

  auto* prepare = app.add_subcommand("prepare", "build normalized splits");
  add_common(prepare, true);

  auto* train = app.add_subcommand("train", "train one generator");
  add_common(train, true);
  train->add_option("--model", model, "classical|qcgan|qcgan-noisy");

  auto* generate = app.add_subcommand("generate", "sample flows from a checkpoint");
  add_common(generate, true);
  generate->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  generate->add_option("-n,--rows", rows, "rows to generate");
  generate->add_option("--output", gen_out, "output CSV path");

  auto* report = app.add_subcommand("report", "metrics + IDS evasion report");
  add_common(report, true);
  report->add_option("--checkpoint", checkpoint_paths, "checkpoint JSON file(s)")
      ->required();

  auto* selftest = app.add_subcommand("selftest", "run the analytic oracle suite");
  (void)selftest;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : qcgan::experiment::kExitUsage;
  }

  try {
    if (app.got_subcommand("selftest"))
      return qcgan::experiment::selftest() == 0 ? qcgan::experiment::kExitOk
                                                : qcgan::experiment::kExitRuntime;

    const ExperimentConfig config = load_config(config_path, seed, out_dir);
    if (app.got_subcommand("prepare")) {
      qcgan::experiment::cmd_prepare(config);
    } else if (app.got_subcommand("train")) {
      const auto kind = model.empty() ? config.train.kind
                                      : qcgan::gan::generator_kind_from_string(model);
      qcgan::experiment::cmd_train(config, kind);
    } else if (app.got_subcommand("generate")) {
      qcgan::experiment::cmd_generate(config, checkpoint_path, rows, gen_out);
    } else if (app.got_subcommand("report")) {
      qcgan::experiment::cmd_report(config, checkpoint_paths);
    }
    return qcgan::experiment::kExitOk;
  } catch (const qcgan::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return qcgan::experiment::kExitConfig;
  } catch (const qcgan::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return qcgan::experiment::kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return qcgan::experiment::kExitRuntime;
  }
}
