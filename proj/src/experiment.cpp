#include "qcgan/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

namespace fs = std::filesystem;

namespace qcgan::experiment {

namespace {

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& path) {
  if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("config: unknown key '" + path + "/" + it.key() + "'");
  }
}

void parse_synthetic_spec_keys(const nlohmann::json& j, const std::string& path) {
  require_keys(j, {"feature_names", "attack", "benign", "attack_fraction",
                   "nuisance_features"},
               path);
  for (const char* cls : {"attack", "benign"}) {
    if (!j.contains(cls)) continue;
    std::size_t i = 0;
    for (const auto& comp : j.at(cls))
      require_keys(comp, {"weight", "mean", "scale"},
                   path + "/" + cls + "[" + std::to_string(i++) + "]");
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

void write_split_csv(const Mat& x, const std::vector<int>& labels,
                     const std::vector<std::string>& names, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& n : names) out << n << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", x(r, c));
      out << buf << ',';
    }
    out << labels[r] << '\n';
  }
}

struct PreparedSplit {
  Mat x;
  std::vector<int> labels;
  std::vector<std::string> names;
};

PreparedSplit load_prepared(const std::string& path) {
  const auto raw = datapipe::load_csv({path});
  PreparedSplit split;
  split.names = raw.feature_names;
  split.x = raw.matrix(raw.feature_names);
  split.labels = raw.labels;
  return split;
}

Mat rows_for_class(const PreparedSplit& split, int label) {
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < split.labels.size(); ++r)
    if (split.labels[r] == label) idx.push_back(r);
  Mat out(idx.size(), split.x.cols);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < split.x.cols; ++c) out(r, c) = split.x(idx[r], c);
  return out;
}

}  // namespace

std::string prepared_dir(const ExperimentConfig& config) {
  return config.out_dir + "/prepared";
}
std::string run_dir(const ExperimentConfig& config, gan::GeneratorKind kind) {
  return config.out_dir + "/runs/" + gan::to_string(kind);
}
std::string report_dir(const ExperimentConfig& config) {
  return config.out_dir + "/report";
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  require_keys(j, {"version", "seed", "out_dir", "data", "features", "train", "circuit",
                   "noise", "metrics", "ids", "report"},
               "");
  if (j.value("version", 0) != 1)
    throw ConfigError("config: 'version' must be 1");

  ExperimentConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.out_dir = j.value("out_dir", std::string("out"));

  if (j.contains("data")) {
    const auto& d = j.at("data");
    require_keys(d, {"source", "csv", "synthetic"}, "data");
    cfg.data.source = d.value("source", std::string("synthetic"));
    if (cfg.data.source != "synthetic" && cfg.data.source != "csv")
      throw ConfigError("config: data/source must be 'synthetic' or 'csv'");
    if (d.contains("csv")) {
      require_keys(d.at("csv"), {"paths"}, "data/csv");
      cfg.data.csv_paths = d.at("csv").value("paths", std::vector<std::string>{});
    }
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      require_keys(s, {"spec", "rows", "train_frac", "val_frac"}, "data/synthetic");
      if (s.contains("spec")) {
        parse_synthetic_spec_keys(s.at("spec"), "data/synthetic/spec");
        cfg.data.synthetic = datapipe::SyntheticSpec::from_json(s.at("spec"));
      }
      cfg.data.synthetic_rows = s.value("rows", std::size_t{4000});
      cfg.data.train_frac = s.value("train_frac", 0.7);
      cfg.data.val_frac = s.value("val_frac", 0.15);
    }
    if (cfg.data.source == "csv" && cfg.data.csv_paths.empty())
      throw ConfigError("config: data/csv/paths required when source is 'csv'");
  }

  if (j.contains("features")) {
    const auto& f = j.at("features");
    require_keys(f, {"mode", "fixed", "stage1"}, "features");
    cfg.features.mode = f.value("mode", std::string("fixed"));
    if (cfg.features.mode != "fixed" && cfg.features.mode != "select")
      throw ConfigError("config: features/mode must be 'fixed' or 'select'");
    cfg.features.fixed = f.value("fixed", cfg.features.fixed);
    if (f.contains("stage1")) {
      const auto& s1 = f.at("stage1");
      require_keys(s1, {"rf_trees", "rf_max_depth", "mi_bins", "l1_target_nonzero",
                        "top_k"},
                   "features/stage1");
      cfg.features.stage1.rf_trees = s1.value("rf_trees", cfg.features.stage1.rf_trees);
      cfg.features.stage1.rf_max_depth =
          s1.value("rf_max_depth", cfg.features.stage1.rf_max_depth);
      cfg.features.stage1.mi_bins = s1.value("mi_bins", cfg.features.stage1.mi_bins);
      cfg.features.stage1.l1_target_nonzero =
          s1.value("l1_target_nonzero", cfg.features.stage1.l1_target_nonzero);
      cfg.features.stage1.top_k = s1.value("top_k", cfg.features.stage1.top_k);
    }
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    require_keys(t, {"generator", "epochs", "batch_size", "n_critic", "gp_lambda",
                     "lr_critic", "lr_generator", "lr_quantum", "val_samples",
                     "latent_clamp_sigma", "train_class"},
                 "train");
    if (t.contains("generator"))
      cfg.train.kind = gan::generator_kind_from_string(t.at("generator"));
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.n_critic = t.value("n_critic", cfg.train.n_critic);
    cfg.train.gp_lambda = t.value("gp_lambda", cfg.train.gp_lambda);
    cfg.train.lr_critic = t.value("lr_critic", cfg.train.lr_critic);
    cfg.train.lr_generator = t.value("lr_generator", cfg.train.lr_generator);
    cfg.train.lr_quantum = t.value("lr_quantum", cfg.train.lr_quantum);
    cfg.train.val_samples = t.value("val_samples", cfg.train.val_samples);
    cfg.train.latent_clamp_sigma =
        t.value("latent_clamp_sigma", cfg.train.latent_clamp_sigma);
    cfg.train_class = t.value("train_class", cfg.train_class);
    if (cfg.train_class != "attack" && cfg.train_class != "all")
      throw ConfigError("config: train/train_class must be 'attack' or 'all'");
  }

  if (j.contains("circuit")) {
    const auto& c = j.at("circuit");
    require_keys(c, {"preset", "num_qubits", "num_blocks", "layers_per_block",
                     "rotations"},
                 "circuit");
    if (c.contains("preset")) {
      const std::string preset = c.at("preset");
      if (preset == "compact16")
        cfg.train.circuit = qgen::CircuitConfig::compact16();
      else if (preset != "default")
        throw ConfigError("config: circuit/preset must be 'default' or 'compact16'");
    }
    cfg.train.circuit.num_qubits = c.value("num_qubits", cfg.train.circuit.num_qubits);
    cfg.train.circuit.num_blocks = c.value("num_blocks", cfg.train.circuit.num_blocks);
    cfg.train.circuit.layers_per_block =
        c.value("layers_per_block", cfg.train.circuit.layers_per_block);
    if (c.contains("rotations")) {
      const std::string r = c.at("rotations");
      if (r == "rx_rz") cfg.train.circuit.rotations = qgen::RotationSet::RxRz;
      else if (r == "ry_rz") cfg.train.circuit.rotations = qgen::RotationSet::RyRz;
      else if (r == "ry_only") cfg.train.circuit.rotations = qgen::RotationSet::RyOnly;
      else throw ConfigError("config: circuit/rotations must be rx_rz|ry_rz|ry_only");
    }
    cfg.train.circuit.validate();
  }

  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    require_keys(n, {"p_depolarizing", "p_bitflip", "gamma_amplitude_damping"}, "noise");
    cfg.train.noise.p_depolarizing = n.value("p_depolarizing", 0.0);
    cfg.train.noise.p_bitflip = n.value("p_bitflip", 0.0);
    cfg.train.noise.gamma_amplitude_damping = n.value("gamma_amplitude_damping", 0.0);
    cfg.train.noise.validate();
  } else {
    cfg.train.noise = qsim::NoiseSpec::hardware_proxy();
  }

  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    require_keys(m, {"kl_bins", "batch_rows", "mmd_max_rows"}, "metrics");
    cfg.metric_cfg.kl_bins = m.value("kl_bins", cfg.metric_cfg.kl_bins);
    cfg.metric_cfg.batch_rows = m.value("batch_rows", cfg.metric_cfg.batch_rows);
    cfg.metric_cfg.mmd_max_rows = m.value("mmd_max_rows", cfg.metric_cfg.mmd_max_rows);
  }
  cfg.metric_cfg.seed = cfg.seed;

  if (j.contains("ids")) {
    const auto& i = j.at("ids");
    require_keys(i, {"train_per_class", "eval_per_side", "rf", "boost", "cnn"}, "ids");
    cfg.ids_cfg.train_per_class = i.value("train_per_class", cfg.ids_cfg.train_per_class);
    cfg.ids_cfg.eval_per_side = i.value("eval_per_side", cfg.ids_cfg.eval_per_side);
    if (i.contains("rf")) {
      require_keys(i.at("rf"), {"n_trees", "max_depth"}, "ids/rf");
      cfg.ids_cfg.rf.n_trees = i.at("rf").value("n_trees", cfg.ids_cfg.rf.n_trees);
      cfg.ids_cfg.rf.max_depth = i.at("rf").value("max_depth", cfg.ids_cfg.rf.max_depth);
    }
    if (i.contains("boost")) {
      require_keys(i.at("boost"), {"rounds", "max_depth", "lambda", "learning_rate"},
                   "ids/boost");
      const auto& b = i.at("boost");
      cfg.ids_cfg.boost.rounds = b.value("rounds", cfg.ids_cfg.boost.rounds);
      cfg.ids_cfg.boost.max_depth = b.value("max_depth", cfg.ids_cfg.boost.max_depth);
      cfg.ids_cfg.boost.lambda = b.value("lambda", cfg.ids_cfg.boost.lambda);
      cfg.ids_cfg.boost.learning_rate =
          b.value("learning_rate", cfg.ids_cfg.boost.learning_rate);
    }
    if (i.contains("cnn")) {
      require_keys(i.at("cnn"), {"channels", "kernel", "epochs", "batch_size", "lr"},
                   "ids/cnn");
      const auto& c = i.at("cnn");
      cfg.ids_cfg.cnn.channels = c.value("channels", cfg.ids_cfg.cnn.channels);
      cfg.ids_cfg.cnn.kernel = c.value("kernel", cfg.ids_cfg.cnn.kernel);
      cfg.ids_cfg.cnn.epochs = c.value("epochs", cfg.ids_cfg.cnn.epochs);
      cfg.ids_cfg.cnn.batch_size = c.value("batch_size", cfg.ids_cfg.cnn.batch_size);
      cfg.ids_cfg.cnn.lr = c.value("lr", cfg.ids_cfg.cnn.lr);
    }
  }

  if (j.contains("report")) {
    require_keys(j.at("report"), {"generated_rows"}, "report");
    cfg.report_generated_rows =
        j.at("report").value("generated_rows", cfg.report_generated_rows);
  }

  cfg.train.seed = cfg.seed;
  cfg.features.stage1.seed = cfg.seed;
  cfg.ids_cfg.rf.seed = cfg.seed;
  cfg.ids_cfg.cnn.seed = cfg.seed;
  cfg.config_hash = fnv1a_hash(j.dump());
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_json(read_json(path));
}

void cmd_prepare(const ExperimentConfig& config) {
  datapipe::RawDataset dataset;
  datapipe::Split split;
  if (config.data.source == "csv") {
    dataset = datapipe::load_csv(config.data.csv_paths);
    split = datapipe::split_official(dataset, config.seed);
  } else {
    dataset = datapipe::generate_synthetic(config.data.synthetic,
                                           config.data.synthetic_rows, config.seed);
    split = datapipe::split_stratified(dataset, config.data.train_frac,
                                       config.data.val_frac, config.seed);
  }

  std::vector<std::string> selected;
  nlohmann::json score_json;
  if (config.features.mode == "fixed") {
    selected = config.features.fixed;
    for (const auto& name : selected) split.train.col_index(name);  // must exist
  } else {
    const auto scores = datapipe::stage1_screen(split.train, config.features.stage1);
    selected = datapipe::stage2_pca_select(split.train, scores.top);
    score_json = {{"feature", scores.feature},
                  {"rf", scores.rf},
                  {"mi", scores.mi},
                  {"l1", scores.l1},
                  {"ensemble", scores.ensemble},
                  {"top", scores.top}};
  }

  const Mat train_raw = split.train.matrix(selected);
  const auto transform = datapipe::QuantileTransform::fit(train_raw);

  const std::string dir = prepared_dir(config);
  ensure_dir(dir);
  write_split_csv(transform.apply(train_raw), split.train.labels, selected,
                  dir + "/train.csv");
  write_split_csv(transform.apply(split.val.matrix(selected)), split.val.labels,
                  selected, dir + "/val.csv");
  write_split_csv(transform.apply(split.test.matrix(selected)), split.test.labels,
                  selected, dir + "/test.csv");

  auto label_count = [](const datapipe::RawDataset& d, int label) {
    return std::count(d.labels.begin(), d.labels.end(), label);
  };
  nlohmann::json sidecar = {
      {"format_version", 1},
      {"seed", config.seed},
      {"config_hash", config.config_hash},
      {"source", config.data.source},
      {"selected_features", selected},
      {"transform", transform.to_json()},
      {"row_counts",
       {{"train", split.train.rows()}, {"val", split.val.rows()}, {"test", split.test.rows()}}},
      {"label_counts",
       {{"train_attack", label_count(split.train, 1)},
        {"train_benign", label_count(split.train, 0)},
        {"test_attack", label_count(split.test, 1)},
        {"test_benign", label_count(split.test, 0)}}}};
  if (!score_json.is_null()) sidecar["feature_scores"] = score_json;
  write_json(sidecar, dir + "/sidecar.json");
}

namespace {

gan::Datasets datasets_for_training(const ExperimentConfig& config) {
  const std::string dir = prepared_dir(config);
  const auto train = load_prepared(dir + "/train.csv");
  const auto val = load_prepared(dir + "/val.csv");
  gan::Datasets data;
  if (config.train_class == "attack") {
    data.train = rows_for_class(train, 1);
    data.val = rows_for_class(val, 1);
    if (data.train.rows == 0)
      throw DataError("train: no attack-labelled rows in the prepared training split");
  } else {
    data.train = train.x;
    data.val = val.x;
  }
  return data;
}

}  // namespace

void cmd_train(const ExperimentConfig& config, gan::GeneratorKind kind) {
  const auto data = datasets_for_training(config);
  gan::TrainConfig tc = config.train;
  tc.kind = kind;
  if (kind != gan::GeneratorKind::QuantumNoisy) tc.noise = qsim::NoiseSpec{};

  const auto result = gan::train(tc, data);

  const std::string dir = run_dir(config, kind);
  ensure_dir(dir);
  gan::write_trace_csv(result.trace, dir + "/trace.csv");

  auto best = result.best;
  best.config_hash = config.config_hash;
  write_json(best.to_json(), dir + "/checkpoint.json");
  auto final_cp = result.final_state;
  final_cp.config_hash = config.config_hash;
  write_json(final_cp.to_json(), dir + "/final.json");

  nlohmann::json summary = {
      {"format_version", 1},
      {"kind", gan::to_string(kind)},
      {"epochs", result.trace.epochs.size()},
      {"initial_mmd", result.trace.initial_mmd},
      {"best_epoch", result.trace.best_epoch},
      {"best_mmd", result.trace.best_mmd},
      {"critic_steps", result.trace.critic_steps},
      {"generator_steps", result.trace.generator_steps},
      {"diverged", result.trace.diverged},
      {"config_hash", config.config_hash},
      {"seed", config.seed}};
  write_json(summary, dir + "/summary.json");

  if (result.trace.diverged)
    throw std::runtime_error("training diverged: " + result.trace.divergence_message +
                             " (partial trace written to " + dir + ")");
}

void cmd_generate(const ExperimentConfig& config, const std::string& checkpoint_path,
                  std::size_t rows, const std::string& out_path) {
  const auto checkpoint = gan::Checkpoint::from_json(read_json(checkpoint_path));
  const auto gen = checkpoint.restore();
  Rng z_rng(mix_seed(config.seed, 0x9e));
  const Mat x = gen.generate_batch(rows, z_rng);

  std::vector<std::string> names;
  const std::string sidecar_path = prepared_dir(config) + "/sidecar.json";
  if (fs::exists(sidecar_path)) {
    names = read_json(sidecar_path)
                .at("selected_features")
                .get<std::vector<std::string>>();
  } else {
    for (std::size_t c = 0; c < x.cols; ++c) names.push_back("f" + std::to_string(c));
  }
  std::vector<int> labels(x.rows, 1);  // generated rows carry the attack label
  write_split_csv(x, labels, names, out_path);
}

namespace {

nlohmann::json tree_to_json(const std::vector<ids::TreeNode>& nodes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes)
    arr.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                   {"v", n.value}});
  return arr;
}

}  // namespace

void cmd_report(const ExperimentConfig& config,
                const std::vector<std::string>& checkpoint_paths) {
  if (checkpoint_paths.empty()) throw ConfigError("report: no checkpoints given");
  const std::string dir = prepared_dir(config);
  const auto test = load_prepared(dir + "/test.csv");
  const auto train = load_prepared(dir + "/train.csv");

  // Balanced real training set for the IDS models.
  const Mat train_attack = rows_for_class(train, 1);
  const Mat train_benign = rows_for_class(train, 0);
  if (train_attack.rows == 0 || train_benign.rows == 0)
    throw DataError("report: the IDS harness needs both classes in the training split");
  const std::size_t per_class = std::min(
      {config.ids_cfg.train_per_class, train_attack.rows, train_benign.rows});
  const Mat attack_sub = metrics::take_rows(
      train_attack,
      metrics::subsample_indices(train_attack.rows, per_class, mix_seed(config.seed, 11)));
  const Mat benign_sub = metrics::take_rows(
      train_benign,
      metrics::subsample_indices(train_benign.rows, per_class, mix_seed(config.seed, 12)));
  ids::Labeled ids_train{Mat(2 * per_class, test.x.cols), std::vector<int>(2 * per_class)};
  for (std::size_t r = 0; r < per_class; ++r) {
    for (std::size_t c = 0; c < ids_train.x.cols; ++c) {
      ids_train.x(r, c) = attack_sub(r, c);
      ids_train.x(per_class + r, c) = benign_sub(r, c);
    }
    ids_train.y[r] = 1;
    ids_train.y[per_class + r] = 0;
  }

  const auto rf = ids::RandomForest::train(ids_train, config.ids_cfg.rf);
  const auto boost = ids::BoostedTrees::train(ids_train, config.ids_cfg.boost);
  const auto cnn = ids::Cnn1d::train(ids_train, config.ids_cfg.cnn);
  const std::vector<std::pair<std::string, const ids::Classifier*>> models = {
      {"rf", &rf}, {"xgboost_like", &boost}, {"cnn1d", &cnn}};

  Mat real_reference = rows_for_class(test, 1);
  if (real_reference.rows == 0) real_reference = test.x;
  const Mat test_benign = rows_for_class(test, 0);

  const std::string rdir = report_dir(config);
  ensure_dir(rdir);
  ensure_dir(rdir + "/models");
  write_json({{"format_version", 1},
              {"model", "random_forest"},
              {"trees", [&] {
                 nlohmann::json arr = nlohmann::json::array();
                 for (const auto& t : rf.trees()) arr.push_back(tree_to_json(t));
                 return arr;
               }()}},
             rdir + "/models/rf.json");
  write_json({{"format_version", 1},
              {"model", "boosted_trees"},
              {"trees", [&] {
                 nlohmann::json arr = nlohmann::json::array();
                 for (const auto& t : boost.trees()) arr.push_back(tree_to_json(t));
                 return arr;
               }()}},
             rdir + "/models/xgboost_like.json");
  write_json({{"format_version", 1},
              {"model", "cnn1d"},
              {"params", cnn.flat_params()}},
             rdir + "/models/cnn1d.json");

  nlohmann::json report = {{"format_version", 1},
                           {"seed", config.seed},
                           {"config_hash", config.config_hash},
                           {"ids_training_rows_per_class", per_class},
                           {"models", nlohmann::json::array()}};

  std::ofstream metrics_csv(rdir + "/metrics_table.csv");
  metrics_csv << "model,params,mmd,mse,wd_mean,wd_std,kl_mean,kl_std\n";
  std::ofstream evasion_csv(rdir + "/evasion_table.csv");
  evasion_csv << "model,ids,dr,asr,f1\n";
  metrics_csv.precision(17);
  evasion_csv.precision(17);

  std::vector<std::pair<std::string, Mat>> generated_sets;
  for (std::size_t i = 0; i < checkpoint_paths.size(); ++i) {
    const auto checkpoint = gan::Checkpoint::from_json(read_json(checkpoint_paths[i]));
    const auto gen = checkpoint.restore();
    std::string name = gan::to_string(checkpoint.kind);
    for (const auto& existing : generated_sets)
      if (existing.first == name) name += "_" + std::to_string(i);

    Rng z_rng(mix_seed(config.seed, 2000 + i));
    const Mat fake = gen.generate_batch(config.report_generated_rows, z_rng);

    const auto metric_report = metrics::compute_report(fake, real_reference,
                                                       config.metric_cfg);
    metrics_csv << name << ',' << gen.parameter_count() << ',' << metric_report.mmd
                << ',' << metric_report.mse << ',' << metric_report.wd_mean << ','
                << metric_report.wd_std << ',' << metric_report.kl_mean << ','
                << metric_report.kl_std << '\n';

    nlohmann::json entry = {
        {"name", name},
        {"checkpoint", checkpoint_paths[i]},
        {"parameter_count", gen.parameter_count()},
        {"metrics",
         {{"mmd", metric_report.mmd},
          {"mse", metric_report.mse},
          {"wd_mean", metric_report.wd_mean},
          {"wd_std", metric_report.wd_std},
          {"kl_mean", metric_report.kl_mean},
          {"kl_std", metric_report.kl_std},
          {"batch_count", metric_report.batch_count}}},
        {"evasion", nlohmann::json::array()}};

    if (test_benign.rows > 0) {
      const std::size_t eval_n = std::min(
          {config.ids_cfg.eval_per_side, fake.rows, test_benign.rows});
      const Mat gen_eval = metrics::take_rows(
          fake, metrics::subsample_indices(fake.rows, eval_n, mix_seed(config.seed, 21)));
      const Mat ben_eval = metrics::take_rows(
          test_benign,
          metrics::subsample_indices(test_benign.rows, eval_n, mix_seed(config.seed, 22)));
      const auto evasion = ids::evaluate_evasion(models, gen_eval, ben_eval);
      for (const auto& row : evasion.rows) {
        evasion_csv << name << ',' << row.classifier << ',' << row.dr << ',' << row.asr
                    << ',' << row.f1 << '\n';
        entry["evasion"].push_back({{"ids", row.classifier},
                                    {"dr", row.dr},
                                    {"asr", row.asr},
                                    {"f1", row.f1},
                                    {"tp", row.cm.tp},
                                    {"fp", row.cm.fp},
                                    {"tn", row.cm.tn},
                                    {"fn", row.cm.fn}});
      }
    }
    report["models"].push_back(std::move(entry));
    generated_sets.emplace_back(name, fake);
  }

  std::vector<std::pair<std::string, const Mat*>> series = {{"real", &real_reference}};
  for (const auto& [name, mat] : generated_sets) series.emplace_back(name, &mat);
  metrics::write_histogram_csv(metrics::histogram_export(series, test.names),
                               rdir + "/histograms.csv");
  write_json(report, rdir + "/report.json");
}

// ---- selftest ---------------------------------------------------------------

namespace {

struct SelfTest {
  int failures = 0;
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : ": ", detail.c_str());
    if (!ok) ++failures;
  }
};

}  // namespace

int selftest() {
  SelfTest t;
  constexpr double kPi = std::numbers::pi;

  // Kraus completeness: sum K^dag K = I for random strengths.
  {
    double worst = 0.0;
    Rng rng(1234);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const double p = uni(rng);
      for (auto kind : {qsim::ChannelKind::Depolarizing, qsim::ChannelKind::BitFlip,
                        qsim::ChannelKind::AmplitudeDamping}) {
        const auto ops = qsim::kraus_ops(kind, p);
        cplx sum[4] = {0, 0, 0, 0};
        for (const auto& k : ops) {
          sum[0] += std::conj(k[0]) * k[0] + std::conj(k[2]) * k[2];
          sum[1] += std::conj(k[0]) * k[1] + std::conj(k[2]) * k[3];
          sum[2] += std::conj(k[1]) * k[0] + std::conj(k[3]) * k[2];
          sum[3] += std::conj(k[1]) * k[1] + std::conj(k[3]) * k[3];
        }
        worst = std::max({worst, std::abs(sum[0] - cplx{1, 0}), std::abs(sum[1]),
                          std::abs(sum[2]), std::abs(sum[3] - cplx{1, 0})});
      }
    }
    t.check("kraus completeness", worst < 1e-12, "residual " + std::to_string(worst));
  }

  // Pure/mixed agreement on random noiseless circuits.
  {
    Rng rng(99);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      qgen::CircuitConfig cc{3, 2, 1, qgen::RotationSet::RxRz};
      Vec theta(cc.param_count());
      for (auto& a : theta) a = angle(rng);
      Vec z(3);
      for (auto& v : z) v = angle(rng) / kPi;
      const Vec pure = qgen::generate(cc, theta, z, {});
      auto mixed_state = qsim::init_ground(3, qsim::Backend::Mixed);
      const auto circuit = qgen::build_circuit(cc, theta, z);
      for (const auto& g : circuit.gates) qsim::apply_gate(mixed_state, g);
      for (int q = 0; q < 3; ++q)
        worst = std::max(worst, std::abs(pure[q] - qsim::expect_z(mixed_state, q)));
    }
    t.check("pure/mixed backend agreement", worst < 1e-9,
            "max deviation " + std::to_string(worst));
  }

  // Encoding analytic check <Z_i> = cos(pi z_i).
  {
    Rng rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Vec z(4);
      for (auto& v : z) v = uni(rng);
      auto state = qsim::init_ground(4, qsim::Backend::Pure);
      qgen::encode(state, z);
      for (int q = 0; q < 4; ++q)
        worst = std::max(worst,
                         std::abs(qsim::expect_z(state, q) - std::cos(kPi * z[q])));
    }
    t.check("angle encoding analytic", worst < 1e-10,
            "max deviation " + std::to_string(worst));
  }

  // Parameter shift vs central finite differences.
  {
    qgen::CircuitConfig cc{2, 2, 1, qgen::RotationSet::RxRz};
    Rng rng(21);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    Vec theta(cc.param_count());
    for (auto& a : theta) a = angle(rng);
    const Vec z = {0.3, -0.6};
    const Vec down = {1.0, -0.5};
    const Vec ps = qgen::parameter_shift_grad(cc, theta, z, {}, down);
    double worst = 0.0;
    const double h = 1e-4;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      Vec shifted(theta);
      shifted[j] += h;
      const Vec plus = qgen::generate(cc, shifted, z, {});
      shifted[j] -= 2 * h;
      const Vec minus = qgen::generate(cc, shifted, z, {});
      double fd = 0.0;
      for (int q = 0; q < 2; ++q) fd += down[q] * (plus[q] - minus[q]) / (2 * h);
      worst = std::max(worst, std::abs(fd - ps[j]) / std::max(1.0, std::abs(fd)));
    }
    t.check("parameter shift vs finite differences", worst < 1e-5,
            "max relative deviation " + std::to_string(worst));
  }

  // Parameter budgets.
  {
    const auto critic = neural::DiffNet::critic();
    const auto classical = neural::DiffNet::classical_generator();
    const bool counts =
        critic.parameter_count() == 8961 && qgen::CircuitConfig{}.param_count() == 48 &&
        qgen::CircuitConfig::compact16().param_count() == 16 &&
        std::abs(double(classical.parameter_count()) - 1412.0) <= 0.01 * 1412.0;
    t.check("parameter budgets (8961 / 48 / 16 / ~1412)", counts);
  }

  // WGAN-GP oracle cases.
  {
    neural::DiffNet linear;
    linear.layers.push_back(neural::DenseLayer{
        {4, 1, neural::Activation::Identity, 0.2, false, 0.0}, Mat(1, 4), Vec(1, 0.0),
        Vec(1, 1.0), Vec(4, 0.0)});
    for (std::size_t c = 0; c < 4; ++c) linear.layers[0].W(0, c) = 0.5;  // ||w|| = 1
    Rng rng(3);
    Mat batch(8, 4);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& v : batch.data) v = uni(rng);
    const auto unit = gan::critic_loss(linear, batch, batch, 10.0, rng);
    neural::DiffNet constant;
    constant.layers.push_back(neural::DenseLayer{
        {4, 1, neural::Activation::Identity, 0.2, false, 0.0}, Mat(1, 4), Vec(1, 2.5),
        Vec(1, 1.0), Vec(4, 0.0)});
    const auto flat = gan::critic_loss(constant, batch, batch, 10.0, rng);
    t.check("wgan-gp oracles (unit-norm 0, constant critic = lambda)",
            std::abs(unit.loss) < 1e-9 && std::abs(flat.loss - 10.0) < 1e-9,
            "losses " + std::to_string(unit.loss) + ", " + std::to_string(flat.loss));
  }

  // Metric identities.
  {
    Rng rng(17);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Mat x(64, 4);
    for (auto& v : x.data) v = uni(rng);
    Mat shifted = x;
    for (auto& v : shifted.data) v += 0.25;
    const bool ok = metrics::wasserstein_per_feature(x, x) == 0.0 &&
                    metrics::mse_quantile_paired(x, x) == 0.0 &&
                    metrics::kl_histogram(x, x) <= 1e-6 && metrics::mmd(x, x) <= 0.01 &&
                    std::abs(metrics::wasserstein_per_feature(x, shifted) - 0.25) <= 1e-9;
    t.check("metric identities (WD/MSE/KL/MMD and translation)", ok);
  }

  // Confusion-matrix arithmetic on degenerate classifiers.
  {
    struct Fixed : ids::Classifier {
      double p;
      explicit Fixed(double v) : p(v) {}
      double predict_proba(std::span<const double>) const override { return p; }
    };
    Fixed always_attack(1.0), always_benign(0.0);
    Mat gen(10, 4), ben(10, 4);
    const auto report = ids::evaluate_evasion(
        {{"attack", &always_attack}, {"benign", &always_benign}}, gen, ben);
    const auto& a = report.rows[0];
    const auto& b = report.rows[1];
    const bool ok = a.dr == 1.0 && a.asr == 0.0 && std::abs(a.f1 - 2.0 / 3.0) < 1e-12 &&
                    b.dr == 0.0 && b.asr == 1.0 && b.f1 == 0.0;
    t.check("evasion confusion-matrix arithmetic", ok);
  }

  std::printf("%d check(s) failed\n", t.failures);
  return t.failures;
}

}  // namespace qcgan::experiment
