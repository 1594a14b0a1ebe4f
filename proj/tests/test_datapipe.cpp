#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qcgan/datapipe.hpp"

using namespace qcgan;
using namespace qcgan::datapipe;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qcgan_test_" + std::to_string(Rng(std::random_device{}())()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_SUITE("datapipe") {

TEST_CASE("load_csv: typed columns, categorical encoding, label parsing") {
  TempDir tmp;
  write_file(tmp.file("a.csv"),
             "dur,state,sbytes,attack_cat,label\n"
             "0.1,FIN,100,Normal,0\n"
             "0.2,CON,250,Exploits,1\n"
             "0.3,FIN,300,Exploits,1\n");
  const auto data = load_csv({tmp.file("a.csv")});
  CHECK(data.rows() == 3);
  CHECK(data.feature_names == std::vector<std::string>{"dur", "state", "sbytes"});
  CHECK(data.labels == std::vector<int>{0, 1, 1});
  CHECK(data.attack_cat[1] == "Exploits");
  // `state` is categorical: CON=0, FIN=1 after sorted encoding
  const auto& state = data.columns[data.col_index("state")];
  CHECK(state == Vec{1.0, 0.0, 1.0});
  CHECK(data.encodings.at("state") == std::vector<std::string>{"CON", "FIN"});
}

TEST_CASE("load_csv errors: missing file, empty file, missing label column") {
  TempDir tmp;
  CHECK_THROWS_AS(load_csv({tmp.file("missing.csv")}), DataError);
  write_file(tmp.file("empty.csv"), "");
  CHECK_THROWS_AS(load_csv({tmp.file("empty.csv")}), DataError);
  write_file(tmp.file("header_only.csv"), "a,b,label\n");
  CHECK_THROWS_WITH_AS(load_csv({tmp.file("header_only.csv")}),
                       doctest::Contains("no rows"), DataError);
  write_file(tmp.file("nolabel.csv"), "a,b\n1,2\n");
  CHECK_THROWS_WITH_AS(load_csv({tmp.file("nolabel.csv")}),
                       doctest::Contains("label"), DataError);
}

TEST_CASE("load_csv drops malformed rows with a count") {
  TempDir tmp;
  write_file(tmp.file("bad.csv"),
             "a,b,label\n1,2,0\n3,4\n5,6,1\n");
  const auto data = load_csv({tmp.file("bad.csv")});
  CHECK(data.rows() == 2);
  CHECK(data.dropped_rows == 1);
}

TEST_CASE("synthetic CSV round-trips bit-exactly") {
  TempDir tmp;
  const auto spec = SyntheticSpec::bimodal();
  const auto data = generate_synthetic(spec, 200, 7);
  write_csv(data, tmp.file("synth.csv"));
  const auto loaded = load_csv({tmp.file("synth.csv")});
  REQUIRE(loaded.rows() == data.rows());
  CHECK(loaded.labels == data.labels);
  CHECK(loaded.feature_names == data.feature_names);
  for (std::size_t c = 0; c < data.columns.size(); ++c)
    CHECK(loaded.columns[c] == data.columns[c]);

  // and the generator itself is seed-deterministic
  const auto again = generate_synthetic(spec, 200, 7);
  CHECK(again.columns[0] == data.columns[0]);
  CHECK(again.labels == data.labels);
}

TEST_CASE("stage1: a perfect predictor saturates the ensemble score") {
  Rng rng(1);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawDataset data;
  data.feature_names = {"perfect", "noise_a", "noise_b"};
  data.columns.resize(3);
  for (int r = 0; r < 400; ++r) {
    const int y = r % 2;
    data.labels.push_back(y);
    data.columns[0].push_back(double(y));
    data.columns[1].push_back(noise(rng));
    data.columns[2].push_back(noise(rng));
  }
  data.file_row_counts = {400};
  Stage1Params params;
  params.rf_trees = 30;
  const auto scores = stage1_screen(data, params);
  const std::size_t perfect = 0;
  CHECK(scores.ensemble[perfect] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(scores.top.front() == "perfect");
  // pure-noise features score low
  CHECK(scores.ensemble[1] < 0.1);
  CHECK(scores.ensemble[2] < 0.1);
}

TEST_CASE("stage1: constant features get zero in every view") {
  Rng rng(2);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawDataset data;
  data.feature_names = {"signal", "constant"};
  data.columns.resize(2);
  for (int r = 0; r < 300; ++r) {
    const int y = r % 2;
    data.labels.push_back(y);
    data.columns[0].push_back(double(y) * 3.0 + noise(rng));
    data.columns[1].push_back(5.0);
  }
  data.file_row_counts = {300};
  Stage1Params params;
  params.rf_trees = 20;
  const auto scores = stage1_screen(data, params);
  CHECK(scores.rf[1] == 0.0);
  CHECK(scores.mi[1] == 0.0);
  CHECK(scores.l1[1] == 0.0);
  CHECK(scores.ensemble[1] == 0.0);
}

TEST_CASE("stage1 ensemble weights are exactly 0.35/0.35/0.30") {
  Rng rng(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawDataset data;
  data.feature_names = {"a", "b"};
  data.columns.resize(2);
  for (int r = 0; r < 200; ++r) {
    const int y = r % 2;
    data.labels.push_back(y);
    data.columns[0].push_back(double(y) * 2.0 + noise(rng));
    data.columns[1].push_back(noise(rng) + 0.3 * y);
  }
  data.file_row_counts = {200};
  Stage1Params params;
  params.rf_trees = 10;
  const auto s = stage1_screen(data, params);
  for (std::size_t f = 0; f < 2; ++f)
    CHECK(s.ensemble[f] ==
          doctest::Approx(0.35 * s.rf[f] + 0.35 * s.mi[f] + 0.30 * s.l1[f])
              .epsilon(1e-12));
  CHECK_THROWS_AS(
      stage1_screen(RawDataset{{"x"}, {Vec(5, 1.0)}, {1, 1, 1, 1, 1}, {}, {}, {5}, 0},
                    params),
      DataError);
}

TEST_CASE("stage2: orthogonal features with graded variances pick the top four") {
  Rng rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawDataset data;
  data.feature_names = {"v4", "v3", "v2", "v1", "v05", "v01"};
  const Vec scales = {4.0, 3.0, 2.0, 1.0, 0.5, 0.1};
  data.columns.resize(6);
  for (int r = 0; r < 800; ++r) {
    data.labels.push_back(r % 2);
    for (std::size_t f = 0; f < 6; ++f) data.columns[f].push_back(scales[f] * noise(rng));
  }
  data.file_row_counts = {800};
  auto picked = stage2_pca_select(data, data.feature_names);
  std::sort(picked.begin(), picked.end());
  CHECK(picked == std::vector<std::string>{"v1", "v2", "v3", "v4"});
}

TEST_CASE("stage2: duplicated columns are picked at most once") {
  Rng rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawDataset data;
  data.feature_names = {"a", "a_copy", "b", "c", "d"};
  data.columns.resize(5);
  for (int r = 0; r < 500; ++r) {
    data.labels.push_back(r % 2);
    const double a = noise(rng);
    data.columns[0].push_back(a);
    data.columns[1].push_back(a);  // exact duplicate
    data.columns[2].push_back(noise(rng));
    data.columns[3].push_back(noise(rng));
    data.columns[4].push_back(noise(rng));
  }
  data.file_row_counts = {500};
  const auto picked = stage2_pca_select(data, data.feature_names);
  CHECK(picked.size() == 4);
  const bool both = std::find(picked.begin(), picked.end(), "a") != picked.end() &&
                    std::find(picked.begin(), picked.end(), "a_copy") != picked.end();
  CHECK_FALSE(both);
}

TEST_CASE("stage2 excludes identifiers and returns distinct features") {
  Rng rng(6);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawDataset data;
  data.feature_names = {"id", "a", "b", "c", "d", "e"};
  data.columns.resize(6);
  for (int r = 0; r < 300; ++r) {
    data.labels.push_back(r % 2);
    data.columns[0].push_back(double(r));
    for (std::size_t f = 1; f < 6; ++f) data.columns[f].push_back(noise(rng));
  }
  data.file_row_counts = {300};
  const auto picked = stage2_pca_select(data, data.feature_names);
  CHECK(picked.size() == 4);
  CHECK(std::find(picked.begin(), picked.end(), "id") == picked.end());
  auto unique = picked;
  std::sort(unique.begin(), unique.end());
  CHECK(std::unique(unique.begin(), unique.end()) == unique.end());
}

TEST_CASE("quantile transform: median to 0, min to -1, monotone, uniform") {
  Rng rng(7);
  std::lognormal_distribution<double> skew(0.0, 1.0);
  const std::size_t n = 10001;  // odd: the median is a sample point
  Mat train(n, 1);
  for (std::size_t r = 0; r < n; ++r) train(r, 0) = skew(rng);
  const auto t = QuantileTransform::fit(train);

  Vec sorted(train.data);
  std::sort(sorted.begin(), sorted.end());
  CHECK(t.apply_one(0, sorted[n / 2]) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(t.apply_one(0, sorted.front()) == doctest::Approx(-1.0));
  CHECK(t.apply_one(0, sorted.back()) == doctest::Approx(1.0));
  // clamping beyond the training range
  CHECK(t.apply_one(0, sorted.front() - 100.0) == doctest::Approx(-1.0));
  CHECK(t.apply_one(0, sorted.back() + 100.0) == doctest::Approx(1.0));

  // monotone
  std::uniform_real_distribution<double> uni(0.0, sorted.back() * 1.1);
  double prev_x = 0.0, prev_y = t.apply_one(0, 0.0);
  for (int i = 0; i < 200; ++i) {
    const double x = prev_x + uni(rng) / 100.0;
    const double y = t.apply_one(0, x);
    CHECK(y >= prev_y);
    prev_x = x;
    prev_y = y;
  }

  // transformed training data is ~uniform on [-1, 1] (KS < 0.02)
  const Mat transformed = t.apply(train);
  Vec ts(transformed.data);
  std::sort(ts.begin(), ts.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf_uniform = (ts[i] + 1.0) / 2.0;
    const double cdf_emp_hi = double(i + 1) / double(n);
    const double cdf_emp_lo = double(i) / double(n);
    ks = std::max({ks, std::abs(cdf_uniform - cdf_emp_hi),
                   std::abs(cdf_uniform - cdf_emp_lo)});
  }
  CHECK(ks < 0.02);
}

TEST_CASE("quantile transform: ties collapse to their average rank") {
  Mat train(12, 1);
  for (std::size_t r = 0; r < 12; ++r) train(r, 0) = r < 6 ? 1.0 : 2.0;
  const auto t = QuantileTransform::fit(train);
  // value 1 covers ranks 0..5 -> avg 2.5/11; value 2 covers 6..11 -> avg 8.5/11
  CHECK(t.apply_one(0, 1.0) == doctest::Approx(2.0 * (2.5 / 11.0) - 1.0));
  CHECK(t.apply_one(0, 2.0) == doctest::Approx(2.0 * (8.5 / 11.0) - 1.0));
}

TEST_CASE("quantile transform requires 10+ rows and json round-trips") {
  Mat tiny(5, 2);
  CHECK_THROWS_AS(QuantileTransform::fit(tiny), DataError);

  Rng rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat train(50, 2);
  for (auto& v : train.data) v = normal(rng);
  const auto t = QuantileTransform::fit(train);
  const auto restored = QuantileTransform::from_json(t.to_json());
  for (int i = 0; i < 20; ++i) {
    const double x = normal(rng);
    CHECK(restored.apply_one(0, x) == t.apply_one(0, x));
    CHECK(restored.apply_one(1, x) == t.apply_one(1, x));
  }
}

TEST_CASE("fit-on-train-only matters: adding validation rows changes the map") {
  Rng rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat train(100, 1), both(200, 1);
  for (std::size_t r = 0; r < 100; ++r) {
    train(r, 0) = normal(rng);
    both(r, 0) = train(r, 0);
  }
  for (std::size_t r = 100; r < 200; ++r) both(r, 0) = normal(rng) + 3.0;  // shifted val
  const auto fit_train = QuantileTransform::fit(train);
  const auto fit_leaky = QuantileTransform::fit(both);
  bool differs = false;
  for (int i = 0; i < 50 && !differs; ++i) {
    const double x = normal(rng);
    differs = std::abs(fit_train.apply_one(0, x) - fit_leaky.apply_one(0, x)) > 1e-9;
  }
  CHECK(differs);
}

TEST_CASE("split_official enforces the published row counts") {
  const auto small = generate_synthetic(SyntheticSpec::separable(1.0), 100, 1);
  CHECK_THROWS_WITH_AS(split_official(small, 0), doctest::Contains("82332"), DataError);
}

TEST_CASE("split_official produces the exact 67512/14820/175341 partition") {
  // synthesize two "files" with the official sizes
  auto part_a = generate_synthetic(SyntheticSpec::separable(2.0), 82332, 2);
  const auto part_b = generate_synthetic(SyntheticSpec::separable(2.0), 175341, 3);
  for (std::size_t c = 0; c < part_a.columns.size(); ++c)
    part_a.columns[c].insert(part_a.columns[c].end(), part_b.columns[c].begin(),
                             part_b.columns[c].end());
  part_a.labels.insert(part_a.labels.end(), part_b.labels.begin(), part_b.labels.end());
  part_a.file_row_counts = {82332, 175341};

  const auto split = split_official(part_a, 11);
  CHECK(split.train.rows() == kOfficialTrain);
  CHECK(split.val.rows() == kOfficialVal);
  CHECK(split.test.rows() == kOfficialTest);

  // stratification: label ratios within 1%
  auto ratio = [](const RawDataset& d) {
    return double(std::count(d.labels.begin(), d.labels.end(), 1)) / double(d.rows());
  };
  CHECK(std::abs(ratio(split.train) - ratio(split.val)) < 0.01);
}

TEST_CASE("split_stratified partitions without overlap and keeps ratios") {
  const auto data = generate_synthetic(SyntheticSpec::separable(1.0), 1000, 12);
  const auto split = split_stratified(data, 0.7, 0.15, 5);
  CHECK(split.train.rows() + split.val.rows() + split.test.rows() == 1000);
  CHECK(split.train.rows() == 700);
  CHECK(split.val.rows() == 150);
  auto ratio = [](const RawDataset& d) {
    return double(std::count(d.labels.begin(), d.labels.end(), 1)) / double(d.rows());
  };
  CHECK(std::abs(ratio(split.train) - ratio(split.val)) < 0.02);
}

TEST_CASE("synthetic spec validation and separation behavior") {
  SyntheticSpec bad = SyntheticSpec::separable(1.0);
  bad.attack[0].weight = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SyntheticSpec::separable(1.0);
  bad.attack[0].mean.pop_back();
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  // separation 0: indistinguishable classes
  const auto zero = generate_synthetic(SyntheticSpec::separable(0.0), 400, 13);
  // json round trip preserves the spec
  const auto spec = SyntheticSpec::bimodal();
  const auto restored = SyntheticSpec::from_json(spec.to_json());
  const auto a = generate_synthetic(spec, 50, 99);
  const auto b = generate_synthetic(restored, 50, 99);
  CHECK(a.columns[0] == b.columns[0]);
  CHECK(zero.rows() == 400);
}

}  // TEST_SUITE
