#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcgan/datapipe.hpp"
#include "qcgan/gan.hpp"
#include "qcgan/ids.hpp"
#include "qcgan/metrics.hpp"

#include "json.hpp"

// Operator surface behind the CLI: config parsing/validation, seeded
// experiment orchestration and report emission.

namespace qcgan::experiment {

// Exit codes used by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

struct DataSection {
  std::string source = "synthetic";  // synthetic | csv
  std::vector<std::string> csv_paths;
  datapipe::SyntheticSpec synthetic = datapipe::SyntheticSpec::bimodal();
  std::size_t synthetic_rows = 4000;
  double train_frac = 0.7;
  double val_frac = 0.15;
};

struct FeatureSection {
  std::string mode = "fixed";  // fixed | select
  std::vector<std::string> fixed = {"f0", "f1", "f2", "f3"};
  datapipe::Stage1Params stage1;
};

struct IdsSection {
  std::size_t train_per_class = 8000;
  std::size_t eval_per_side = 8000;
  ids::ForestParams rf;
  ids::BoostParams boost;
  ids::CnnParams cnn;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  DataSection data;
  FeatureSection features;
  gan::TrainConfig train;
  std::string train_class = "attack";  // attack | all: rows the GAN learns from
  metrics::MetricConfig metric_cfg;
  IdsSection ids_cfg;
  std::size_t report_generated_rows = 8000;
  std::uint64_t config_hash = 0;

  // Strict parse: schema version 1, unknown keys rejected with their path.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

// prepare: load or synthesize -> split -> select features (fit on the train
// split) -> quantile transform (fit on the train split) -> persist matrices
// and the JSON sidecar under <out_dir>/prepared/.
void cmd_prepare(const ExperimentConfig& config);

// train: read prepared splits, train one generator kind, write
// <out_dir>/runs/<kind>/checkpoint.json and trace.csv. Throws on divergence
// after persisting the partial trace.
void cmd_train(const ExperimentConfig& config, gan::GeneratorKind kind);

// generate: restore a checkpoint and write `rows` generated samples as CSV.
void cmd_generate(const ExperimentConfig& config, const std::string& checkpoint_path,
                  std::size_t rows, const std::string& out_path);

// report: generate flows per checkpoint, compute the metric report, train and
// evaluate the three IDS models, and emit consolidated JSON plus CSV tables.
void cmd_report(const ExperimentConfig& config,
                const std::vector<std::string>& checkpoint_paths);

// Quick analytic oracle suite; prints one PASS/FAIL line per check and
// returns the number of failures.
int selftest();

// Paths used by the commands (relative to out_dir).
std::string prepared_dir(const ExperimentConfig& config);
std::string run_dir(const ExperimentConfig& config, gan::GeneratorKind kind);
std::string report_dir(const ExperimentConfig& config);

}  // namespace qcgan::experiment
