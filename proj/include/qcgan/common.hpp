#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcgan {

using cplx = std::complex<double>;
using Vec = std::vector<double>;
using Rng = std::mt19937_64;

// Failure classes. The CLI maps these to distinct exit codes
// (config -> 2, data -> 3, anything else -> 4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Rows are samples throughout the repo.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Sum with a fixed pairwise reduction order: deterministic regardless of how
// the inputs were produced, and more accurate than sequential accumulation.
double pairwise_sum(std::span<const double> xs);

// Mean over a span via pairwise_sum. Empty span -> 0.
double mean_of(std::span<const double> xs);

// Runs fn(0..n-1), possibly on several threads. Each index must write only
// to its own output slot; reductions happen afterwards in index order, so
// results are independent of the thread count. QCGAN_THREADS=1 disables
// threading entirely.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// SplitMix64-style derivation of independent seed streams from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a over a string; used for config hashes embedded in artifacts.
std::uint64_t fnv1a_hash(const std::string& s);

}  // namespace qcgan
