#include "qcgan/datapipe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qcgan/ids.hpp"

namespace qcgan::datapipe {

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + s.size();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RawDataset take_rows_raw(const RawDataset& data, const std::vector<std::size_t>& idx) {
  RawDataset out;
  out.feature_names = data.feature_names;
  out.encodings = data.encodings;
  out.columns.resize(data.columns.size());
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    out.columns[c].reserve(idx.size());
    for (auto i : idx) out.columns[c].push_back(data.columns[c][i]);
  }
  out.labels.reserve(idx.size());
  for (auto i : idx) out.labels.push_back(data.labels[i]);
  if (!data.attack_cat.empty()) {
    out.attack_cat.reserve(idx.size());
    for (auto i : idx) out.attack_cat.push_back(data.attack_cat[i]);
  }
  out.file_row_counts = {idx.size()};
  return out;
}

void standardize_columns(Mat& m) {
  for (std::size_t c = 0; c < m.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) mean += m(r, c);
    mean /= double(m.rows);
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double d = m(r, c) - mean;
      var += d * d;
    }
    var /= double(m.rows);
    const double sd = std::sqrt(var);
    for (std::size_t r = 0; r < m.rows; ++r)
      m(r, c) = sd > 1e-12 ? (m(r, c) - mean) / sd : 0.0;
  }
}

}  // namespace

std::size_t RawDataset::col_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return i;
  throw DataError("unknown feature column: " + name);
}

Mat RawDataset::matrix(const std::vector<std::string>& names) const {
  Mat m(rows(), names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Vec& col = columns[col_index(names[c])];
    for (std::size_t r = 0; r < rows(); ++r) m(r, c) = col[r];
  }
  return m;
}

Mat matrix_for_label(const RawDataset& data, const std::vector<std::string>& names,
                     int label) {
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < data.rows(); ++r)
    if (data.labels[r] == label) idx.push_back(r);
  Mat m(idx.size(), names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Vec& col = data.columns[data.col_index(names[c])];
    for (std::size_t r = 0; r < idx.size(); ++r) m(r, c) = col[idx[r]];
  }
  return m;
}

RawDataset load_csv(const std::vector<std::string>& paths) {
  if (paths.empty()) throw DataError("load_csv: no input files");
  RawDataset out;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> raw_columns;
  std::ptrdiff_t label_col = -1, cat_col = -1;

  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": no rows");
    auto file_header = split_csv_line(line);
    if (header.empty()) {
      header = file_header;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "label") label_col = std::ptrdiff_t(i);
        if (header[i] == "attack_cat") cat_col = std::ptrdiff_t(i);
      }
      if (label_col < 0)
        throw DataError(path + ": missing required column 'label'");
      raw_columns.resize(header.size());
    } else if (file_header != header) {
      throw DataError(path + ": header does not match " + paths.front());
    }

    std::size_t file_rows = 0;
    std::size_t line_no = 1;
    std::vector<std::size_t> bad_lines;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_csv_line(line);
      if (fields.size() != header.size()) {
        bad_lines.push_back(line_no);
        continue;
      }
      for (std::size_t i = 0; i < fields.size(); ++i)
        raw_columns[i].push_back(std::move(fields[i]));
      ++file_rows;
    }
    if (file_rows == 0) throw DataError(path + ": no rows");
    if (!bad_lines.empty()) {
      std::string sample;
      for (std::size_t i = 0; i < std::min<std::size_t>(bad_lines.size(), 10); ++i)
        sample += (i ? "," : "") + std::to_string(bad_lines[i]);
      std::fprintf(stderr, "qcgan: %s: dropped %zu malformed row(s) at line(s) %s%s\n",
                   path.c_str(), bad_lines.size(), sample.c_str(),
                   bad_lines.size() > 10 ? ",..." : "");
      out.dropped_rows += bad_lines.size();
    }
    out.file_row_counts.push_back(file_rows);
  }

  const std::size_t n = raw_columns[label_col].size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (std::ptrdiff_t(i) == label_col) {
      out.labels.reserve(n);
      for (const auto& s : raw_columns[i]) {
        double v;
        if (!parse_double(s, v) || (v != 0.0 && v != 1.0))
          throw DataError("label column must contain 0/1, got '" + s + "'");
        out.labels.push_back(int(v));
      }
      continue;
    }
    if (std::ptrdiff_t(i) == cat_col) {
      out.attack_cat = std::move(raw_columns[i]);
      continue;
    }
    bool numeric = true;
    double v;
    for (const auto& s : raw_columns[i]) {
      if (!s.empty() && !parse_double(s, v)) {
        numeric = false;
        break;
      }
    }
    Vec col(n);
    if (numeric) {
      for (std::size_t r = 0; r < n; ++r) {
        col[r] = 0.0;
        if (!raw_columns[i][r].empty()) parse_double(raw_columns[i][r], col[r]);
      }
    } else {
      // label-encode with a sorted level table
      std::vector<std::string> levels(raw_columns[i]);
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      for (std::size_t r = 0; r < n; ++r) {
        const auto it =
            std::lower_bound(levels.begin(), levels.end(), raw_columns[i][r]);
        col[r] = double(it - levels.begin());
      }
      out.encodings[header[i]] = std::move(levels);
    }
    out.feature_names.push_back(header[i]);
    out.columns.push_back(std::move(col));
    raw_columns[i].clear();
    raw_columns[i].shrink_to_fit();
  }
  return out;
}

void write_csv(const RawDataset& data, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot write " + path);
  for (const auto& name : data.feature_names) outf << name << ',';
  if (!data.attack_cat.empty()) outf << "attack_cat,";
  outf << "label\n";
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.columns.size(); ++c) {
      const auto& name = data.feature_names[c];
      const auto enc = data.encodings.find(name);
      if (enc != data.encodings.end())
        outf << enc->second[std::size_t(data.columns[c][r])];
      else
        outf << format_double(data.columns[c][r]);
      outf << ',';
    }
    if (!data.attack_cat.empty()) outf << data.attack_cat[r] << ',';
    outf << data.labels[r] << '\n';
  }
}

// ---- Stage 1 ----------------------------------------------------------------

namespace {

Vec mutual_information_scores(const RawDataset& data, int bins) {
  const std::size_t n = data.rows();
  const std::size_t n1 = std::size_t(std::count(data.labels.begin(), data.labels.end(), 1));
  const double py[2] = {double(n - n1) / double(n), double(n1) / double(n)};
  Vec scores(data.feature_names.size(), 0.0);
  for (std::size_t f = 0; f < data.columns.size(); ++f) {
    const Vec& col = data.columns[f];
    Vec sorted(col);
    std::sort(sorted.begin(), sorted.end());
    // equal-frequency bin edges; duplicates collapse empty bins away
    Vec edges;
    for (int b = 1; b < bins; ++b) {
      const double e = sorted[std::size_t(double(b) * double(n) / double(bins))];
      if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    const std::size_t n_bins = edges.size() + 1;
    if (n_bins < 2) continue;  // constant feature
    std::vector<std::array<double, 2>> joint(n_bins, {0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r) {
      const auto bin = std::size_t(
          std::upper_bound(edges.begin(), edges.end(), col[r]) - edges.begin());
      joint[bin][std::size_t(data.labels[r])] += 1.0;
    }
    double mi = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double pb = (joint[b][0] + joint[b][1]) / double(n);
      for (int y = 0; y < 2; ++y) {
        const double pby = joint[b][y] / double(n);
        if (pby > 0.0 && pb > 0.0 && py[y] > 0.0)
          mi += pby * std::log(pby / (pb * py[y]));
      }
    }
    scores[f] = std::max(mi, 0.0);
  }
  return scores;
}

Vec l1_logistic_scores(const RawDataset& data, double target_nonzero) {
  const std::size_t n = data.rows();
  const std::size_t d = data.feature_names.size();
  Mat x = data.matrix(data.feature_names);
  standardize_columns(x);
  Vec y(n);
  for (std::size_t r = 0; r < n; ++r) y[r] = double(data.labels[r]);

  // Lipschitz bound of the logistic gradient: sigma_max(X)^2 / (4n), via
  // power iteration on X^T X.
  Mat xtx(d, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x(r, i);
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) xtx(i, j) += xi * x(r, j);
    }
  Vec pv(d, 1.0 / std::sqrt(double(d)));
  double sigma2 = 1.0;
  for (int it = 0; it < 60; ++it) {
    Vec next(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) next[i] += xtx(i, j) * pv[j];
    double nrm = 0.0;
    for (double v : next) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-30) break;
    for (auto& v : next) v /= nrm;
    pv = next;
    sigma2 = nrm;
  }
  const double step = 1.0 / std::max(sigma2 / (4.0 * double(n)), 1e-12);

  // lambda_max zeroes every coefficient; walk the grid down with warm starts
  // and keep the solution with ~target_nonzero of the coefficients alive.
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  double lambda_max = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    double dot = 0.0;
    for (std::size_t r = 0; r < n; ++r) dot += x(r, f) * (y[r] - ybar);
    lambda_max = std::max(lambda_max, std::abs(dot) / double(n));
  }
  if (lambda_max <= 0.0) return Vec(d, 0.0);

  const auto target = std::max<std::size_t>(1, std::size_t(std::lround(target_nonzero * double(d))));
  Vec w(d, 0.0), best_w(d, 0.0);
  double b = 0.0;
  std::size_t best_gap = std::size_t(-1);
  Vec p(n), gw(d);
  for (int gi = 0; gi < 15; ++gi) {
    const double lambda = lambda_max * std::pow(0.72, double(gi + 1));
    for (int it = 0; it < 150; ++it) {
      for (std::size_t r = 0; r < n; ++r) {
        double z = b;
        for (std::size_t f = 0; f < d; ++f) z += x(r, f) * w[f];
        p[r] = 1.0 / (1.0 + std::exp(-z)) - y[r];
      }
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        gb += p[r];
        for (std::size_t f = 0; f < d; ++f) gw[f] += x(r, f) * p[r];
      }
      gb /= double(n);
      for (std::size_t f = 0; f < d; ++f) {
        const double raw = w[f] - step * gw[f] / double(n);
        const double thr = step * lambda;
        w[f] = raw > thr ? raw - thr : (raw < -thr ? raw + thr : 0.0);
      }
      b -= step * gb;
    }
    std::size_t nnz = 0;
    for (double v : w) nnz += (v != 0.0);
    const std::size_t gap = nnz > target ? nnz - target : target - nnz;
    if (gap < best_gap) {
      best_gap = gap;
      best_w = w;
    }
    if (nnz >= target && gap == 0) break;
  }
  for (auto& v : best_w) v = std::abs(v);
  return best_w;
}

void min_max_normalize(Vec& v) {
  if (v.empty()) return;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  if (span <= 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  for (auto& x : v) x = (x - *lo) / span;
}

}  // namespace

FeatureScores stage1_screen(const RawDataset& data, const Stage1Params& params) {
  if (data.rows() == 0) throw DataError("stage1_screen: empty dataset");
  const auto n1 = std::count(data.labels.begin(), data.labels.end(), 1);
  if (n1 == 0 || std::size_t(n1) == data.rows())
    throw DataError("stage1_screen: need both classes present");

  FeatureScores scores;
  scores.feature = data.feature_names;

  ids::Labeled labeled{data.matrix(data.feature_names), data.labels};
  ids::ForestParams fp;
  fp.n_trees = params.rf_trees;
  fp.max_depth = params.rf_max_depth;
  fp.seed = params.seed;
  scores.rf = ids::RandomForest::train(labeled, fp).feature_importances();
  scores.mi = mutual_information_scores(data, params.mi_bins);
  scores.l1 = l1_logistic_scores(data, params.l1_target_nonzero);

  min_max_normalize(scores.rf);
  min_max_normalize(scores.mi);
  min_max_normalize(scores.l1);

  scores.ensemble.resize(scores.feature.size());
  for (std::size_t f = 0; f < scores.feature.size(); ++f)
    scores.ensemble[f] = 0.35 * scores.rf[f] + 0.35 * scores.mi[f] + 0.30 * scores.l1[f];

  std::vector<std::size_t> order(scores.feature.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.ensemble[a] > scores.ensemble[b];
  });
  for (std::size_t i = 0; i < std::min(params.top_k, order.size()); ++i)
    scores.top.push_back(scores.feature[order[i]]);
  return scores;
}

// ---- Stage 2 ----------------------------------------------------------------

namespace {

// Cyclic Jacobi eigendecomposition of a small symmetric matrix. Returns
// eigenvalues and keeps the rotations in `vecs` (columns are eigenvectors).
Vec jacobi_eigen(Mat a, Mat& vecs) {
  const std::size_t d = a.rows;
  vecs = Mat(d, d);
  for (std::size_t i = 0; i < d; ++i) vecs(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(a(p, q)) < 1e-18) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = vecs(k, p), vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
  }
  Vec eig(d);
  for (std::size_t i = 0; i < d; ++i) eig[i] = a(i, i);
  return eig;
}

}  // namespace

std::vector<std::string> stage2_pca_select(const RawDataset& data,
                                           const std::vector<std::string>& candidates,
                                           const Stage2Params& params) {
  std::vector<std::string> names;
  for (const auto& c : candidates)
    if (std::find(params.exclude.begin(), params.exclude.end(), c) ==
        params.exclude.end())
      names.push_back(c);
  if (names.size() < params.select)
    throw DataError("stage2_pca_select: fewer candidates than requested features");

  Mat x = data.matrix(names);
  Vec raw_variance(names.size(), 0.0);
  for (std::size_t c = 0; c < x.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) mean += x(r, c);
    mean /= double(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r)
      raw_variance[c] += (x(r, c) - mean) * (x(r, c) - mean);
    raw_variance[c] /= double(x.rows);
  }
  standardize_columns(x);

  const std::size_t d = names.size();
  Mat corr(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) s += x(r, i) * x(r, j);
      corr(i, j) = s / double(x.rows);
    }

  Mat vecs;
  Vec eig = jacobi_eigen(corr, vecs);
  std::vector<std::size_t> comp(d);
  std::iota(comp.begin(), comp.end(), std::size_t{0});
  std::stable_sort(comp.begin(), comp.end(),
                   [&](std::size_t a, std::size_t b) { return eig[a] > eig[b]; });

  std::size_t positive = 0;
  for (double e : eig) positive += (e > 1e-12);
  std::vector<std::string> picked;
  std::vector<std::size_t> picked_idx;

  auto redundant = [&](std::size_t f) {
    for (auto p : picked_idx)
      if (std::abs(corr(f, p)) > params.redundancy_corr) return true;
    return false;
  };

  // A flat correlation spectrum means the components carry no structure
  // beyond per-feature variance; loadings are then sampling noise and the
  // variance ranking below decides instead.
  const bool flat_spectrum = eig[comp.front()] < 1.5;

  if (positive >= params.select && !flat_spectrum) {
    for (std::size_t ci = 0; ci < d && picked.size() < params.select; ++ci) {
      const std::size_t c = comp[ci];
      if (eig[c] <= 1e-12) break;
      // features by |loading| on this component, first admissible wins
      std::vector<std::size_t> by_loading(d);
      std::iota(by_loading.begin(), by_loading.end(), std::size_t{0});
      std::stable_sort(by_loading.begin(), by_loading.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(vecs(a, c)) > std::abs(vecs(b, c));
      });
      for (auto f : by_loading) {
        if (std::find(picked_idx.begin(), picked_idx.end(), f) != picked_idx.end())
          continue;
        if (redundant(f)) continue;
        picked.push_back(names[f]);
        picked_idx.push_back(f);
        break;
      }
    }
  } else {
    std::fprintf(stderr,
                 "qcgan: stage2 covariance is rank-deficient; falling back to "
                 "variance ranking\n");
  }

  // Fill any remaining slots by raw variance (also the rank-deficient path).
  std::vector<std::size_t> by_var(d);
  std::iota(by_var.begin(), by_var.end(), std::size_t{0});
  std::stable_sort(by_var.begin(), by_var.end(), [&](std::size_t a, std::size_t b) {
    return raw_variance[a] > raw_variance[b];
  });
  for (auto f : by_var) {
    if (picked.size() >= params.select) break;
    if (std::find(picked_idx.begin(), picked_idx.end(), f) != picked_idx.end()) continue;
    if (redundant(f)) continue;
    picked.push_back(names[f]);
    picked_idx.push_back(f);
  }
  // If the redundancy rule blocked everything (e.g. duplicated columns), relax it.
  for (auto f : by_var) {
    if (picked.size() >= params.select) break;
    if (std::find(picked_idx.begin(), picked_idx.end(), f) != picked_idx.end()) continue;
    picked.push_back(names[f]);
    picked_idx.push_back(f);
  }
  return picked;
}

// ---- Quantile transform -------------------------------------------------------

QuantileTransform QuantileTransform::fit(const Mat& train, std::size_t max_landmarks) {
  if (train.rows < 10)
    throw DataError("quantile transform: need at least 10 training rows, got " +
                    std::to_string(train.rows));
  if (max_landmarks < 2) throw ConfigError("quantile transform: max_landmarks < 2");
  QuantileTransform t;
  t.landmarks_.resize(train.cols);
  const std::size_t n = train.rows;
  for (std::size_t c = 0; c < train.cols; ++c) {
    Vec sorted(n);
    for (std::size_t r = 0; r < n; ++r) sorted[r] = train(r, c);
    std::sort(sorted.begin(), sorted.end());
    // collapse ties to their average rank
    std::vector<std::pair<double, double>> distinct;
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      const double avg_rank = (double(i) + double(j)) / 2.0;
      distinct.emplace_back(sorted[i], avg_rank / double(n - 1));
      i = j + 1;
    }
    if (distinct.size() <= max_landmarks) {
      t.landmarks_[c] = std::move(distinct);
      continue;
    }
    // resample at evenly spaced cdf positions by inverse interpolation
    std::vector<std::pair<double, double>> resampled;
    resampled.reserve(max_landmarks);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < max_landmarks; ++k) {
      const double u = (double(k) / double(max_landmarks - 1)) *
                           (distinct.back().second - distinct.front().second) +
                       distinct.front().second;
      while (seg + 1 < distinct.size() && distinct[seg + 1].second < u) ++seg;
      double value;
      if (u <= distinct[seg].second) {
        value = distinct[seg].first;
      } else {
        const auto& [v0, u0] = distinct[seg];
        const auto& [v1, u1] = distinct[seg + 1];
        value = v0 + (v1 - v0) * (u - u0) / (u1 - u0);
      }
      if (!resampled.empty() && value <= resampled.back().first) {
        resampled.back().second = u;  // merge, keep the later cdf
      } else {
        resampled.emplace_back(value, u);
      }
    }
    t.landmarks_[c] = std::move(resampled);
  }
  return t;
}

double QuantileTransform::apply_one(std::size_t feature, double value) const {
  const auto& lm = landmarks_.at(feature);
  double u;
  if (value <= lm.front().first) {
    u = lm.front().second;
  } else if (value >= lm.back().first) {
    u = lm.back().second;
  } else {
    const auto it = std::lower_bound(
        lm.begin(), lm.end(), value,
        [](const std::pair<double, double>& p, double v) { return p.first < v; });
    if (it->first == value) {
      u = it->second;
    } else {
      const auto& [v1, u1] = *it;
      const auto& [v0, u0] = *(it - 1);
      u = u0 + (u1 - u0) * (value - v0) / (v1 - v0);
    }
  }
  return 2.0 * u - 1.0;
}

Mat QuantileTransform::apply(const Mat& data) const {
  if (data.cols != landmarks_.size())
    throw UsageError("quantile transform: feature count mismatch");
  Mat out(data.rows, data.cols);
  for (std::size_t c = 0; c < data.cols; ++c)
    for (std::size_t r = 0; r < data.rows; ++r) out(r, c) = apply_one(c, data(r, c));
  return out;
}

nlohmann::json QuantileTransform::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& lm : landmarks_) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [v, u] : lm) pairs.push_back({v, u});
    features.push_back(std::move(pairs));
  }
  return {{"landmarks", std::move(features)}};
}

QuantileTransform QuantileTransform::from_json(const nlohmann::json& j) {
  QuantileTransform t;
  for (const auto& feature : j.at("landmarks")) {
    std::vector<std::pair<double, double>> lm;
    for (const auto& pair : feature)
      lm.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    t.landmarks_.push_back(std::move(lm));
  }
  return t;
}

// ---- Splits --------------------------------------------------------------------

namespace {

Split stratified_indices_split(const RawDataset& data,
                               const std::vector<std::size_t>& pool,
                               std::size_t train_target, std::uint64_t seed) {
  std::vector<std::size_t> attack, benign;
  for (auto i : pool) (data.labels[i] ? attack : benign).push_back(i);
  Rng rng(mix_seed(seed, 0x517));
  std::shuffle(attack.begin(), attack.end(), rng);
  std::shuffle(benign.begin(), benign.end(), rng);

  const double frac = double(train_target) / double(pool.size());
  std::size_t attack_train = std::size_t(std::lround(frac * double(attack.size())));
  attack_train = std::min(attack_train, attack.size());
  std::size_t benign_train = train_target - attack_train;
  if (benign_train > benign.size()) {  // rebalance if rounding overshot
    attack_train += benign_train - benign.size();
    benign_train = benign.size();
  }

  std::vector<std::size_t> train_idx, val_idx;
  train_idx.insert(train_idx.end(), attack.begin(), attack.begin() + attack_train);
  train_idx.insert(train_idx.end(), benign.begin(), benign.begin() + benign_train);
  val_idx.insert(val_idx.end(), attack.begin() + attack_train, attack.end());
  val_idx.insert(val_idx.end(), benign.begin() + benign_train, benign.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  Split split;
  split.train = take_rows_raw(data, train_idx);
  split.val = take_rows_raw(data, val_idx);
  return split;
}

}  // namespace

Split split_official(const RawDataset& data, std::uint64_t seed) {
  const std::size_t part_a = kOfficialTrain + kOfficialVal;  // 82,332
  if (data.file_row_counts.size() != 2 ||
      std::min(data.file_row_counts[0], data.file_row_counts[1]) != part_a ||
      std::max(data.file_row_counts[0], data.file_row_counts[1]) != kOfficialTest) {
    std::string got;
    for (auto c : data.file_row_counts) got += std::to_string(c) + " ";
    throw DataError(
        "split_official: expected two source files with " + std::to_string(part_a) +
        " and " + std::to_string(kOfficialTest) + " rows; got " + got);
  }
  const bool first_is_small = data.file_row_counts[0] == part_a;
  const std::size_t boundary = data.file_row_counts[0];
  std::vector<std::size_t> small_idx, big_idx;
  for (std::size_t i = 0; i < data.rows(); ++i)
    ((i < boundary) == first_is_small ? small_idx : big_idx).push_back(i);

  Split split = stratified_indices_split(data, small_idx, kOfficialTrain, seed);
  split.test = take_rows_raw(data, big_idx);
  return split;
}

Split split_stratified(const RawDataset& data, double train_frac, double val_frac,
                       std::uint64_t seed) {
  if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac > 1.0)
    throw ConfigError("split_stratified: invalid fractions");
  std::vector<std::size_t> all(data.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto train_target = std::size_t(std::lround(train_frac * double(data.rows())));
  const auto val_target = std::size_t(std::lround(val_frac * double(data.rows())));

  Split first = stratified_indices_split(data, all, train_target, seed);
  // split the remainder into val/test, stratified again
  std::vector<std::size_t> rest(first.val.rows());
  std::iota(rest.begin(), rest.end(), std::size_t{0});
  const RawDataset remainder = std::move(first.val);
  Split second = stratified_indices_split(remainder, rest, val_target, seed + 1);
  Split out;
  out.train = std::move(first.train);
  out.val = std::move(second.train);
  out.test = std::move(second.val);
  return out;
}

// ---- Synthetic data --------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (feature_names.empty()) throw ConfigError("synthetic spec: no features");
  if (attack.empty() || benign.empty())
    throw ConfigError("synthetic spec: both classes need at least one component");
  if (!(attack_fraction >= 0.0 && attack_fraction <= 1.0))
    throw ConfigError("synthetic spec: attack_fraction must be in [0, 1]");
  for (const auto* cls : {&attack, &benign}) {
    double total = 0.0;
    for (const auto& comp : *cls) {
      if (comp.weight <= 0.0) throw ConfigError("synthetic spec: weights must be > 0");
      if (comp.mean.size() != feature_names.size() ||
          comp.scale.size() != feature_names.size())
        throw ConfigError("synthetic spec: component size mismatch");
      total += comp.weight;
    }
    if (total <= 0.0) throw ConfigError("synthetic spec: zero total weight");
  }
}

nlohmann::json SyntheticSpec::to_json() const {
  auto comps = [](const std::vector<MixtureComponent>& cs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cs)
      arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"scale", c.scale}});
    return arr;
  };
  return {{"feature_names", feature_names},
          {"attack", comps(attack)},
          {"benign", comps(benign)},
          {"attack_fraction", attack_fraction},
          {"nuisance_features", nuisance_features}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  spec.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  auto comps = [](const nlohmann::json& arr) {
    std::vector<MixtureComponent> cs;
    for (const auto& c : arr) {
      MixtureComponent m;
      m.weight = c.at("weight").get<double>();
      m.mean = c.at("mean").get<Vec>();
      m.scale = c.at("scale").get<Vec>();
      cs.push_back(std::move(m));
    }
    return cs;
  };
  spec.attack = comps(j.at("attack"));
  spec.benign = comps(j.at("benign"));
  spec.attack_fraction = j.value("attack_fraction", 0.5);
  spec.nuisance_features = j.value("nuisance_features", std::size_t{0});
  spec.validate();
  return spec;
}

SyntheticSpec SyntheticSpec::separable(double separation) {
  SyntheticSpec spec;
  const std::size_t d = spec.feature_names.size();
  MixtureComponent attack{1.0, Vec(d, separation / 2.0), Vec(d, 1.0)};
  MixtureComponent benign{1.0, Vec(d, -separation / 2.0), Vec(d, 1.0)};
  spec.attack = {attack};
  spec.benign = {benign};
  return spec;
}

SyntheticSpec SyntheticSpec::bimodal(double center, double spread) {
  SyntheticSpec spec;
  const std::size_t d = spec.feature_names.size();
  spec.attack = {{0.5, Vec(d, center), Vec(d, spread)},
                 {0.5, Vec(d, -center), Vec(d, spread)}};
  spec.benign = {{1.0, Vec(d, 0.0), Vec(d, 0.3)}};
  return spec;
}

RawDataset generate_synthetic(const SyntheticSpec& spec, std::size_t n,
                              std::uint64_t seed) {
  spec.validate();
  RawDataset out;
  out.feature_names = spec.feature_names;
  for (std::size_t i = 0; i < spec.nuisance_features; ++i)
    out.feature_names.push_back("nuis" + std::to_string(i));
  out.columns.assign(out.feature_names.size(), Vec());
  for (auto& col : out.columns) col.reserve(n);

  const auto n_attack = std::size_t(std::lround(spec.attack_fraction * double(n)));
  Rng rng(mix_seed(seed, 0x5e3d));
  std::normal_distribution<double> normal(0.0, 1.0);

  auto pick_component = [&](const std::vector<MixtureComponent>& comps) -> const MixtureComponent& {
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    std::uniform_real_distribution<double> uni(0.0, total);
    double ticket = uni(rng);
    for (const auto& c : comps) {
      if (ticket < c.weight) return c;
      ticket -= c.weight;
    }
    return comps.back();
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[order[i]] = i < n_attack ? 1 : 0;

  out.labels = labels;
  const std::size_t d = spec.feature_names.size();
  for (std::size_t r = 0; r < n; ++r) {
    const auto& comp = pick_component(labels[r] ? spec.attack : spec.benign);
    for (std::size_t f = 0; f < d; ++f)
      out.columns[f].push_back(comp.mean[f] + comp.scale[f] * normal(rng));
    for (std::size_t f = d; f < out.feature_names.size(); ++f)
      out.columns[f].push_back(normal(rng));
  }
  out.file_row_counts = {n};
  return out;
}

}  // namespace qcgan::datapipe
