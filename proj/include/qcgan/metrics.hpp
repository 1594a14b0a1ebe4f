#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcgan/common.hpp"

// Distribution-quality metrics: MMD (RBF kernel, median-distance bandwidth),
// per-feature 1-D Wasserstein distance, smoothed-histogram KL divergence, and
// quantile-paired MSE, plus per-feature histogram export for plotting.

namespace qcgan::metrics {

struct MetricConfig {
  std::size_t kl_bins = 50;
  double kl_eps = 1e-6;
  std::size_t batch_rows = 2000;    // WD/KL are mean +- std over batches this size
  std::size_t mmd_max_rows = 2000;  // MMD/MSE subsample cap
  std::uint64_t seed = 0;
};

// Unbiased MMD^2 estimator with a Gaussian RBF kernel whose bandwidth is the
// median pairwise distance of the pooled samples; returns sqrt(max(MMD^2, 0)).
double mmd(const Mat& x, const Mat& y);

// Mean over features of the 1-D Wasserstein distance between sorted columns.
// The larger input is subsampled (seeded) to match the smaller.
double wasserstein_per_feature(const Mat& x, const Mat& y, std::uint64_t seed = 0);

// Mean over features of KL(real || gen) on equal-width histograms over
// [-1, 1] with additive smoothing. Values outside the range land in the edge
// bins.
double kl_histogram(const Mat& real, const Mat& gen, std::size_t bins = 50,
                    double eps = 1e-6);

// Mean over features of the MSE between quantile-matched (sorted) columns;
// the larger input is subsampled (seeded) to match.
double mse_quantile_paired(const Mat& gen, const Mat& real, std::uint64_t seed = 0);

struct MetricReport {
  double mmd = 0.0;
  double mse = 0.0;
  double wd_mean = 0.0, wd_std = 0.0;
  double kl_mean = 0.0, kl_std = 0.0;
  std::size_t batch_count = 0;
  MetricConfig config;
};

// Full report: MMD/MSE on seeded subsamples, WD/KL as mean +- std across
// consecutive batches of the real set (generated rows subsampled per batch).
MetricReport compute_report(const Mat& gen, const Mat& real, const MetricConfig& cfg);

struct HistogramTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> series_names;
  std::vector<double> bin_edges;  // bins+1 edges over [-1, 1]
  // densities[series][feature][bin], each (series, feature) sums to 1
  std::vector<std::vector<std::vector<double>>> densities;
};

HistogramTable histogram_export(const std::vector<std::pair<std::string, const Mat*>>& series,
                                const std::vector<std::string>& feature_names,
                                std::size_t bins = 50);

void write_histogram_csv(const HistogramTable& table, const std::string& path);

// Seeded draw of `count` distinct row indices from [0, rows).
std::vector<std::size_t> subsample_indices(std::size_t rows, std::size_t count,
                                           std::uint64_t seed);
Mat take_rows(const Mat& m, const std::vector<std::size_t>& idx);

}  // namespace qcgan::metrics
