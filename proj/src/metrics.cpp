#include "qcgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace qcgan::metrics {

namespace {

void check_widths(const Mat& x, const Mat& y, const char* what) {
  if (x.cols != y.cols)
    throw DataError(std::string(what) + ": sample widths differ (" +
                    std::to_string(x.cols) + " vs " + std::to_string(y.cols) + ")");
  if (x.rows == 0 || y.rows == 0)
    throw DataError(std::string(what) + ": empty sample set");
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double median_sq_distance(const Mat& x, const Mat& y) {
  std::vector<double> d2;
  const std::size_t n = x.rows + y.rows;
  d2.reserve(n * (n - 1) / 2);
  auto row = [&](std::size_t i) {
    return i < x.rows ? x.row(i) : y.row(i - x.rows);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d2.push_back(sq_dist(row(i), row(j)));
  if (d2.empty()) return 0.0;
  const std::size_t mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
  return d2[mid];
}

double sample_std(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / double(xs.size() - 1));
}

Vec sorted_column(const Mat& m, std::size_t col) {
  Vec out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = m(r, col);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> subsample_indices(std::size_t rows, std::size_t count,
                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= rows) return idx;
  Rng rng(mix_seed(seed, 5));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat take_rows(const Mat& m, const std::vector<std::size_t>& idx) {
  Mat out(idx.size(), m.cols);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(idx[r], c);
  return out;
}

double mmd(const Mat& x, const Mat& y) {
  check_widths(x, y, "mmd");
  if (x.rows < 2 || y.rows < 2)
    throw DataError("mmd: need at least 2 rows per sample set");
  const double med = median_sq_distance(x, y);
  const double two_h2 = med > 0.0 ? 2.0 * med : 2.0;  // degenerate pooled set
  auto kernel = [&](std::span<const double> a, std::span<const double> b) {
    return std::exp(-sq_dist(a, b) / two_h2);
  };

  const std::size_t m = x.rows, n = y.rows;
  std::vector<double> kxx, kyy, kxy;
  kxx.reserve(m * (m - 1) / 2);
  kyy.reserve(n * (n - 1) / 2);
  kxy.reserve(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) kxx.push_back(kernel(x.row(i), x.row(j)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) kyy.push_back(kernel(y.row(i), y.row(j)));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) kxy.push_back(kernel(x.row(i), y.row(j)));

  const double term_xx = 2.0 * pairwise_sum(kxx) / (double(m) * double(m - 1));
  const double term_yy = 2.0 * pairwise_sum(kyy) / (double(n) * double(n - 1));
  const double term_xy = 2.0 * pairwise_sum(kxy) / (double(m) * double(n));
  return std::sqrt(std::max(term_xx + term_yy - term_xy, 0.0));
}

double wasserstein_per_feature(const Mat& x, const Mat& y, std::uint64_t seed) {
  check_widths(x, y, "wasserstein_per_feature");
  const Mat* a = &x;
  const Mat* b = &y;
  Mat reduced;
  if (x.rows != y.rows) {
    const bool x_larger = x.rows > y.rows;
    const Mat& big = x_larger ? x : y;
    const std::size_t target = x_larger ? y.rows : x.rows;
    reduced = take_rows(big, subsample_indices(big.rows, target, seed));
    a = x_larger ? &reduced : &x;
    b = x_larger ? &y : &reduced;
  }
  Vec per_feature(a->cols);
  for (std::size_t c = 0; c < a->cols; ++c) {
    const Vec xs = sorted_column(*a, c);
    const Vec ys = sorted_column(*b, c);
    Vec diffs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) diffs[i] = std::abs(xs[i] - ys[i]);
    per_feature[c] = mean_of(diffs);
  }
  return mean_of(per_feature);
}

double kl_histogram(const Mat& real, const Mat& gen, std::size_t bins, double eps) {
  check_widths(real, gen, "kl_histogram");
  if (bins < 2) throw ConfigError("kl_histogram: need at least 2 bins");
  auto histogram = [&](const Mat& m, std::size_t col) {
    Vec h(bins, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double v = std::clamp(m(r, col), -1.0, 1.0);
      auto bin = static_cast<std::size_t>((v + 1.0) / 2.0 * double(bins));
      if (bin >= bins) bin = bins - 1;
      h[bin] += 1.0;
    }
    const double denom = double(m.rows) + double(bins) * eps * double(m.rows);
    for (auto& c : h) c = (c + eps * double(m.rows)) / denom;
    return h;
  };
  Vec per_feature(real.cols);
  for (std::size_t c = 0; c < real.cols; ++c) {
    const Vec p = histogram(real, c);
    const Vec q = histogram(gen, c);
    double kl = 0.0;
    for (std::size_t b = 0; b < bins; ++b)
      if (p[b] > 0.0) kl += p[b] * std::log(p[b] / q[b]);
    per_feature[c] = kl;
  }
  return mean_of(per_feature);
}

double mse_quantile_paired(const Mat& gen, const Mat& real, std::uint64_t seed) {
  check_widths(gen, real, "mse_quantile_paired");
  const Mat* a = &gen;
  const Mat* b = &real;
  Mat reduced;
  if (gen.rows != real.rows) {
    const bool gen_larger = gen.rows > real.rows;
    const Mat& big = gen_larger ? gen : real;
    const std::size_t target = gen_larger ? real.rows : gen.rows;
    reduced = take_rows(big, subsample_indices(big.rows, target, seed));
    a = gen_larger ? &reduced : &gen;
    b = gen_larger ? &real : &reduced;
  }
  Vec per_feature(a->cols);
  for (std::size_t c = 0; c < a->cols; ++c) {
    const Vec xs = sorted_column(*a, c);
    const Vec ys = sorted_column(*b, c);
    Vec sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - ys[i];
      sq[i] = d * d;
    }
    per_feature[c] = mean_of(sq);
  }
  return mean_of(per_feature);
}

MetricReport compute_report(const Mat& gen, const Mat& real, const MetricConfig& cfg) {
  check_widths(gen, real, "compute_report");
  MetricReport report;
  report.config = cfg;

  const Mat gen_sub =
      take_rows(gen, subsample_indices(gen.rows, cfg.mmd_max_rows, mix_seed(cfg.seed, 1)));
  const Mat real_sub =
      take_rows(real, subsample_indices(real.rows, cfg.mmd_max_rows, mix_seed(cfg.seed, 2)));
  report.mmd = mmd(gen_sub, real_sub);
  report.mse = mse_quantile_paired(gen, real, mix_seed(cfg.seed, 3));

  Vec wd_vals, kl_vals;
  for (std::size_t start = 0; start < real.rows; start += cfg.batch_rows) {
    const std::size_t count = std::min(cfg.batch_rows, real.rows - start);
    if (count < 10 && !wd_vals.empty()) break;  // drop a tiny trailing batch
    Mat batch(count, real.cols);
    for (std::size_t r = 0; r < count; ++r)
      for (std::size_t c = 0; c < real.cols; ++c) batch(r, c) = real(start + r, c);
    const std::uint64_t batch_seed = mix_seed(cfg.seed, 100 + start / cfg.batch_rows);
    const Mat gen_batch =
        take_rows(gen, subsample_indices(gen.rows, count, batch_seed));
    wd_vals.push_back(wasserstein_per_feature(gen_batch, batch, batch_seed));
    kl_vals.push_back(kl_histogram(batch, gen_batch, cfg.kl_bins, cfg.kl_eps));
  }
  report.batch_count = wd_vals.size();
  report.wd_mean = mean_of(wd_vals);
  report.wd_std = sample_std(wd_vals, report.wd_mean);
  report.kl_mean = mean_of(kl_vals);
  report.kl_std = sample_std(kl_vals, report.kl_mean);
  return report;
}

HistogramTable histogram_export(const std::vector<std::pair<std::string, const Mat*>>& series,
                                const std::vector<std::string>& feature_names,
                                std::size_t bins) {
  if (series.empty()) throw DataError("histogram_export: no series");
  HistogramTable table;
  table.feature_names = feature_names;
  table.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    table.bin_edges[b] = -1.0 + 2.0 * double(b) / double(bins);
  for (const auto& [name, mat] : series) {
    if (mat->cols != feature_names.size())
      throw DataError("histogram_export: series '" + name + "' width mismatch");
    table.series_names.push_back(name);
    std::vector<std::vector<double>> per_feature;
    for (std::size_t c = 0; c < mat->cols; ++c) {
      std::vector<double> h(bins, 0.0);
      for (std::size_t r = 0; r < mat->rows; ++r) {
        const double v = std::clamp((*mat)(r, c), -1.0, 1.0);
        auto bin = static_cast<std::size_t>((v + 1.0) / 2.0 * double(bins));
        if (bin >= bins) bin = bins - 1;
        h[bin] += 1.0;
      }
      for (auto& x : h) x /= double(mat->rows);
      per_feature.push_back(std::move(h));
    }
    table.densities.push_back(std::move(per_feature));
  }
  return table;
}

void write_histogram_csv(const HistogramTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "series,feature,bin_lo,bin_hi,density\n";
  for (std::size_t s = 0; s < table.series_names.size(); ++s)
    for (std::size_t f = 0; f < table.feature_names.size(); ++f)
      for (std::size_t b = 0; b + 1 < table.bin_edges.size(); ++b)
        out << table.series_names[s] << ',' << table.feature_names[f] << ','
            << table.bin_edges[b] << ',' << table.bin_edges[b + 1] << ','
            << table.densities[s][f][b] << '\n';
}

}  // namespace qcgan::metrics
