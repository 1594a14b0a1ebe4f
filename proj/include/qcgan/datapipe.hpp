#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcgan/common.hpp"

#include "json.hpp"

// UNSW-NB15 ingestion, quantile preprocessing, the two-stage feature
// selection pipeline, dataset splits, and a synthetic data generator so the
// full pipeline runs without the real dataset.

namespace qcgan::datapipe {

struct RawDataset {
  std::vector<std::string> feature_names;
  std::vector<Vec> columns;  // column-major, parallel to feature_names
  std::vector<int> labels;   // 1 = attack, 0 = benign
  std::vector<std::string> attack_cat;  // optional, empty if absent
  // Categorical columns are label-encoded; the level tables are kept so the
  // mapping can be persisted and reapplied.
  std::map<std::string, std::vector<std::string>> encodings;
  std::vector<std::size_t> file_row_counts;  // one entry per source file
  std::size_t dropped_rows = 0;

  std::size_t rows() const { return labels.size(); }
  std::size_t col_index(const std::string& name) const;
  Mat matrix(const std::vector<std::string>& names) const;
};

// Loads one or more CSV files (comma-separated, header row, UTF-8) into a
// single dataset. A `label` column with 0/1 values is required; `attack_cat`
// is kept if present. Columns whose non-empty values all parse as numbers are
// numeric; anything else is label-encoded. Rows with the wrong column count
// are dropped with a stderr note carrying their line numbers.
RawDataset load_csv(const std::vector<std::string>& paths);

void write_csv(const RawDataset& data, const std::string& path);

// ---- Stage 1: coarse screening ----------------------------------------------

struct Stage1Params {
  int rf_trees = 100;
  int rf_max_depth = 12;
  int mi_bins = 32;
  double l1_target_nonzero = 0.5;  // fraction of coefficients kept nonzero
  std::size_t top_k = 8;
  std::uint64_t seed = 0;
};

struct FeatureScores {
  std::vector<std::string> feature;
  Vec rf, mi, l1, ensemble;  // all min-max normalized to [0, 1]
  std::vector<std::string> top;  // descending ensemble score, top_k entries
};

// Ensemble score 0.35*RF + 0.35*MI + 0.30*L1 over min-max normalized views.
FeatureScores stage1_screen(const RawDataset& data, const Stage1Params& params = {});

// ---- Stage 2: PCA-based fine selection ---------------------------------------

struct Stage2Params {
  std::size_t select = 4;
  double redundancy_corr = 0.9;  // |Pearson| above this skips a candidate
  std::vector<std::string> exclude = {"id"};  // identifiers are not features
};

// Greedy pick of the largest-|loading| feature on each leading principal
// component of the standardized candidates, skipping redundant ones.
std::vector<std::string> stage2_pca_select(const RawDataset& data,
                                           const std::vector<std::string>& candidates,
                                           const Stage2Params& params = {});

// ---- Quantile transform -------------------------------------------------------

// Per-feature empirical-CDF map onto [-1, 1], fit on training data only.
// Ties collapse to their average rank; queries interpolate linearly between
// landmarks and clamp outside the training range.
class QuantileTransform {
 public:
  static QuantileTransform fit(const Mat& train, std::size_t max_landmarks = 1001);
  Mat apply(const Mat& data) const;
  double apply_one(std::size_t feature, double value) const;
  std::size_t features() const { return landmarks_.size(); }

  nlohmann::json to_json() const;
  static QuantileTransform from_json(const nlohmann::json& j);

 private:
  // per feature: (value, cdf) pairs with cdf in [0, 1], strictly increasing values
  std::vector<std::vector<std::pair<double, double>>> landmarks_;
};

// ---- Splits --------------------------------------------------------------------

struct Split {
  RawDataset train, val, test;
};

// The official UNSW-NB15 partition: the 82,332-row file is split
// stratified-by-label into 67,512 train + 14,820 val; the 175,341-row file is
// the held-out test set. Any other source sizes are an error.
Split split_official(const RawDataset& data, std::uint64_t seed);

inline constexpr std::size_t kOfficialTrain = 67512;
inline constexpr std::size_t kOfficialVal = 14820;
inline constexpr std::size_t kOfficialTest = 175341;

// Generic stratified split by fractions (used for synthetic data).
Split split_stratified(const RawDataset& data, double train_frac, double val_frac,
                       std::uint64_t seed);

// ---- Synthetic data --------------------------------------------------------------

struct MixtureComponent {
  double weight = 1.0;
  Vec mean;   // one entry per feature
  Vec scale;  // per-feature normal scale
};

struct SyntheticSpec {
  std::vector<std::string> feature_names = {"f0", "f1", "f2", "f3"};
  std::vector<MixtureComponent> attack;
  std::vector<MixtureComponent> benign;
  double attack_fraction = 0.5;
  std::size_t nuisance_features = 0;  // extra N(0,1) columns named nuis<i>

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);

  // Two classes separated by `separation` along every feature, unit scale.
  static SyntheticSpec separable(double separation);
  // Attack rows from a two-mode mixture at +-center inside [-1, 1]; benign
  // rows form a unimodal blob. Used by the desk-scale GAN runs.
  static SyntheticSpec bimodal(double center = 0.55, double spread = 0.15);
};

RawDataset generate_synthetic(const SyntheticSpec& spec, std::size_t n,
                              std::uint64_t seed);

// Row-matrix of the given columns restricted to one label value.
Mat matrix_for_label(const RawDataset& data, const std::vector<std::string>& names,
                     int label);

}  // namespace qcgan::datapipe
