#include "qcgan/ids.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qcgan::ids {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double gini(std::size_t n_attack, std::size_t n_total) {
  if (n_total == 0) return 0.0;
  const double p = double(n_attack) / double(n_total);
  return 2.0 * p * (1.0 - p);
}

int descend(const std::vector<TreeNode>& nodes, std::span<const double> row) {
  int idx = 0;
  while (nodes[idx].feature >= 0) {
    idx = row[nodes[idx].feature] <= nodes[idx].threshold ? nodes[idx].left
                                                          : nodes[idx].right;
  }
  return idx;
}

}  // namespace

void Labeled::validate() const {
  if (x.rows != y.size())
    throw DataError("labeled data: row/label counts differ");
  for (int label : y)
    if (label != 0 && label != 1) throw DataError("labeled data: labels must be 0/1");
}

double accuracy(const Classifier& model, const Labeled& data) {
  data.validate();
  if (data.rows() == 0) throw DataError("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.rows(); ++r)
    if (model.predict(data.x.row(r)) == data.y[r]) ++correct;
  return double(correct) / double(data.rows());
}

// ---- Random forest ---------------------------------------------------------

namespace {

struct RfBuilder {
  const Labeled& data;
  const ForestParams& params;
  std::vector<TreeNode> nodes;
  Vec importance;  // accumulated weighted impurity decrease
  Rng rng;
  std::size_t n_root;
  int n_subset;

  RfBuilder(const Labeled& d, const ForestParams& p, std::uint64_t seed)
      : data(d),
        params(p),
        importance(d.x.cols, 0.0),
        rng(seed),
        n_root(0),
        n_subset(std::max<int>(1, int(std::ceil(std::sqrt(double(d.x.cols)))))) {}

  int build(std::vector<std::size_t>& idx, int depth) {
    const std::size_t n = idx.size();
    std::size_t attacks = 0;
    for (auto i : idx) attacks += std::size_t(data.y[i]);
    const double node_gini = gini(attacks, n);
    const int node_id = int(nodes.size());
    nodes.push_back({});
    nodes[node_id].value = n ? double(attacks) / double(n) : 0.0;

    if (depth >= params.max_depth || n < std::size_t(params.min_samples_split) ||
        attacks == 0 || attacks == n)
      return node_id;

    // sqrt(d) candidate features per split
    std::vector<std::size_t> features(data.x.cols);
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(std::min<std::size_t>(n_subset, features.size()));

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_decrease = 0.0;
    std::vector<std::pair<double, int>> vals(n);
    for (std::size_t f : features) {
      for (std::size_t i = 0; i < n; ++i)
        vals[i] = {data.x(idx[i], f), data.y[idx[i]]};
      std::sort(vals.begin(), vals.end());
      std::size_t left_n = 0, left_attacks = 0;
      for (std::size_t i = 1; i < n; ++i) {
        left_n += 1;
        left_attacks += std::size_t(vals[i - 1].second);
        if (vals[i].first <= vals[i - 1].first) continue;
        const double child =
            (double(left_n) * gini(left_attacks, left_n) +
             double(n - left_n) * gini(attacks - left_attacks, n - left_n)) /
            double(n);
        const double decrease = node_gini - child;
        if (decrease > best_decrease + 1e-15) {
          best_decrease = decrease;
          best_feature = int(f);
          best_threshold = (vals[i - 1].first + vals[i].first) / 2.0;
        }
      }
    }
    if (best_feature < 0) return node_id;  // no informative split

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx)
      (data.x(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return node_id;

    importance[best_feature] += double(n) / double(n_root) * best_decrease;
    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    idx.clear();
    idx.shrink_to_fit();
    nodes[node_id].left = build(left_idx, depth + 1);
    nodes[node_id].right = build(right_idx, depth + 1);
    return node_id;
  }
};

}  // namespace

RandomForest RandomForest::train(const Labeled& data, const ForestParams& params) {
  data.validate();
  if (data.rows() == 0) throw DataError("random forest: empty training data");
  const std::size_t attacks =
      std::size_t(std::count(data.y.begin(), data.y.end(), 1));
  if (attacks == 0 || attacks == data.rows())
    throw DataError("random forest: training data contains a single class");
  if (params.n_trees < 1) throw ConfigError("random forest: n_trees must be >= 1");

  RandomForest forest;
  forest.trees_.resize(params.n_trees);
  std::vector<Vec> tree_importance(params.n_trees);
  parallel_for(std::size_t(params.n_trees), [&](std::size_t t) {
    RfBuilder builder(data, params, mix_seed(params.seed, t));
    std::vector<std::size_t> idx(data.rows());
    std::uniform_int_distribution<std::size_t> pick(0, data.rows() - 1);
    for (auto& i : idx) i = pick(builder.rng);
    builder.n_root = idx.size();
    builder.build(idx, 0);
    forest.trees_[t] = std::move(builder.nodes);
    tree_importance[t] = std::move(builder.importance);
  });

  forest.importances_.assign(data.x.cols, 0.0);
  for (const auto& imp : tree_importance)
    for (std::size_t f = 0; f < imp.size(); ++f) forest.importances_[f] += imp[f];
  const double total =
      std::accumulate(forest.importances_.begin(), forest.importances_.end(), 0.0);
  if (total > 0)
    for (auto& v : forest.importances_) v /= total;
  return forest;
}

double RandomForest::predict_proba(std::span<const double> row) const {
  std::size_t votes = 0;
  for (const auto& tree : trees_)
    if (tree[descend(tree, row)].value >= 0.5) ++votes;
  return double(votes) / double(trees_.size());
}

// ---- Boosted trees ---------------------------------------------------------

namespace {

struct BoostBuilder {
  const Mat& x;
  const Vec& grad;
  const Vec& hess;
  double lambda;
  int max_depth;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t>& idx, int depth) {
    double g_sum = 0.0, h_sum = 0.0;
    for (auto i : idx) {
      g_sum += grad[i];
      h_sum += hess[i];
    }
    const int node_id = int(nodes.size());
    nodes.push_back({});
    nodes[node_id].value = -g_sum / (h_sum + lambda);
    if (depth >= max_depth || idx.size() < 2) return node_id;

    const double parent_obj = g_sum * g_sum / (h_sum + lambda);
    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    std::vector<std::pair<double, std::size_t>> vals(idx.size());
    for (std::size_t f = 0; f < x.cols; ++f) {
      for (std::size_t i = 0; i < idx.size(); ++i) vals[i] = {x(idx[i], f), idx[i]};
      std::sort(vals.begin(), vals.end());
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 1; i < vals.size(); ++i) {
        gl += grad[vals[i - 1].second];
        hl += hess[vals[i - 1].second];
        if (vals[i].first <= vals[i - 1].first) continue;
        const double gr = g_sum - gl, hr = h_sum - hl;
        const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                   parent_obj);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = int(f);
          best_threshold = (vals[i - 1].first + vals[i].first) / 2.0;
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx)
      (x(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return node_id;
    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    nodes[node_id].left = build(left_idx, depth + 1);
    nodes[node_id].right = build(right_idx, depth + 1);
    return node_id;
  }
};

}  // namespace

BoostedTrees BoostedTrees::train(const Labeled& data, const BoostParams& params) {
  data.validate();
  if (data.rows() == 0) throw DataError("boosted trees: empty training data");
  const std::size_t attacks =
      std::size_t(std::count(data.y.begin(), data.y.end(), 1));
  if (attacks == 0 || attacks == data.rows())
    throw DataError("boosted trees: training data contains a single class");

  BoostedTrees model;
  model.learning_rate_ = params.learning_rate;
  const std::size_t n = data.rows();
  Vec score(n, model.base_score_);
  Vec grad(n), hess(n);
  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = p - double(data.y[i]);
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    BoostBuilder builder{data.x, grad, hess, params.lambda, params.max_depth, {}};
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    builder.build(idx, 0);
    // fold the learning rate into the stored leaf weights
    for (auto& node : builder.nodes)
      if (node.feature < 0) node.value *= params.learning_rate;
    for (std::size_t i = 0; i < n; ++i)
      score[i] += builder.nodes[descend(builder.nodes, data.x.row(i))].value;
    model.trees_.push_back(std::move(builder.nodes));

    Vec losses(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(sigmoid(score[i]), 1e-12, 1.0 - 1e-12);
      losses[i] = data.y[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    model.train_logloss_.push_back(mean_of(losses));
  }
  return model;
}

double BoostedTrees::raw_score(std::span<const double> row) const {
  double s = base_score_;
  for (const auto& tree : trees_) s += tree[descend(tree, row)].value;
  return s;
}

double BoostedTrees::predict_proba(std::span<const double> row) const {
  return sigmoid(raw_score(row));
}

// ---- CNN1D -----------------------------------------------------------------

Cnn1d::Cnn1d(int input_len, const ParamsView& p) : input_len_(input_len), p_(p) {
  if (p.conv_w.rows != p.conv_b.size() || p.conv_w.rows != p.head_w.size())
    throw UsageError("cnn1d: inconsistent parameter shapes");
  if (int(p.conv_w.cols) > input_len)
    throw ConfigError("cnn1d: kernel longer than the input sequence");
}

Vec Cnn1d::flat_params() const {
  Vec flat(p_.conv_w.data);
  flat.insert(flat.end(), p_.conv_b.begin(), p_.conv_b.end());
  flat.insert(flat.end(), p_.head_w.begin(), p_.head_w.end());
  flat.push_back(p_.head_b);
  return flat;
}

void Cnn1d::set_flat_params(std::span<const double> flat) {
  std::size_t off = 0;
  std::copy(flat.begin(), flat.begin() + p_.conv_w.data.size(), p_.conv_w.data.begin());
  off += p_.conv_w.data.size();
  std::copy(flat.begin() + off, flat.begin() + off + p_.conv_b.size(), p_.conv_b.begin());
  off += p_.conv_b.size();
  std::copy(flat.begin() + off, flat.begin() + off + p_.head_w.size(), p_.head_w.begin());
  off += p_.head_w.size();
  p_.head_b = flat[off];
}

double Cnn1d::predict_proba(std::span<const double> row) const {
  const int channels = int(p_.conv_w.rows);
  const int kernel = int(p_.conv_w.cols);
  const int t_out = input_len_ - kernel + 1;
  double logit = p_.head_b;
  for (int c = 0; c < channels; ++c) {
    double pool = 0.0;
    for (int t = 0; t < t_out; ++t) {
      double z = p_.conv_b[c];
      for (int j = 0; j < kernel; ++j) z += p_.conv_w(c, j) * row[t + j];
      pool += std::max(z, 0.0);
    }
    logit += p_.head_w[c] * pool / double(t_out);
  }
  return sigmoid(logit);
}

double Cnn1d::loss_and_grad(const Cnn1d& net, const Labeled& batch, Vec& grad) {
  const int channels = int(net.p_.conv_w.rows);
  const int kernel = int(net.p_.conv_w.cols);
  const int t_out = net.input_len_ - kernel + 1;
  const std::size_t n = batch.rows();
  grad.assign(net.flat_params().size(), 0.0);
  Vec losses(n);

  Mat dconv_w(channels, kernel);
  Vec dconv_b(channels, 0.0), dhead_w(channels, 0.0);
  double dhead_b = 0.0;

  for (std::size_t r = 0; r < n; ++r) {
    const auto row = batch.x.row(r);
    double logit = net.p_.head_b;
    Vec pool(channels, 0.0);
    Mat zs(channels, t_out);
    for (int c = 0; c < channels; ++c) {
      for (int t = 0; t < t_out; ++t) {
        double val = net.p_.conv_b[c];
        for (int j = 0; j < kernel; ++j) val += net.p_.conv_w(c, j) * row[t + j];
        zs(c, t) = val;
        pool[c] += std::max(val, 0.0);
      }
      pool[c] /= double(t_out);
      logit += net.p_.head_w[c] * pool[c];
    }
    const double p = sigmoid(logit);
    const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
    losses[r] = batch.y[r] ? -std::log(pc) : -std::log(1.0 - pc);

    const double dlogit = (p - double(batch.y[r])) / double(n);
    dhead_b += dlogit;
    for (int c = 0; c < channels; ++c) {
      dhead_w[c] += dlogit * pool[c];
      const double dpool = dlogit * net.p_.head_w[c] / double(t_out);
      for (int t = 0; t < t_out; ++t) {
        if (zs(c, t) <= 0.0) continue;
        dconv_b[c] += dpool;
        for (int j = 0; j < kernel; ++j) dconv_w(c, j) += dpool * row[t + j];
      }
    }
  }

  std::size_t off = 0;
  std::copy(dconv_w.data.begin(), dconv_w.data.end(), grad.begin());
  off += dconv_w.data.size();
  std::copy(dconv_b.begin(), dconv_b.end(), grad.begin() + off);
  off += dconv_b.size();
  std::copy(dhead_w.begin(), dhead_w.end(), grad.begin() + off);
  off += dhead_w.size();
  grad[off] = dhead_b;
  return mean_of(losses);
}

Cnn1d Cnn1d::train(const Labeled& data, const CnnParams& params) {
  data.validate();
  if (data.rows() == 0) throw DataError("cnn1d: empty training data");
  const int input_len = int(data.x.cols);
  Rng rng(mix_seed(params.seed, 0xc1));
  ParamsView p;
  p.conv_w = Mat(params.channels, params.kernel);
  p.conv_b.assign(params.channels, 0.0);
  p.head_w.assign(params.channels, 0.0);
  const double a_conv = std::sqrt(6.0 / double(params.kernel + params.channels));
  std::uniform_real_distribution<double> uc(-a_conv, a_conv);
  for (auto& w : p.conv_w.data) w = uc(rng);
  const double a_head = std::sqrt(6.0 / double(params.channels + 1));
  std::uniform_real_distribution<double> uh(-a_head, a_head);
  for (auto& w : p.head_w) w = uh(rng);

  Cnn1d net(input_len, p);
  Vec flat = net.flat_params();
  neural::AdamState adam(flat.size(), params.lr, 0.9, 0.999);
  Vec grad;

  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t count = std::min(params.batch_size, order.size() - start);
      Labeled batch{Mat(count, data.x.cols), std::vector<int>(count)};
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = order[start + i];
        for (std::size_t c = 0; c < data.x.cols; ++c) batch.x(i, c) = data.x(src, c);
        batch.y[i] = data.y[src];
      }
      const double loss = loss_and_grad(net, batch, grad);
      if (!std::isfinite(loss))
        throw UsageError("cnn1d: training diverged (non-finite loss)");
      neural::adam_step(flat, grad, adam);
      net.set_flat_params(flat);
    }
  }
  return net;
}

// ---- Evasion ----------------------------------------------------------------

double ConfusionMatrix::f1() const {
  const double denom = double(2 * tp + fp + fn);
  return denom > 0 ? 2.0 * double(tp) / denom : 0.0;
}

EvasionReport evaluate_evasion(
    const std::vector<std::pair<std::string, const Classifier*>>& models,
    const Mat& generated_attacks, const Mat& real_benign) {
  if (generated_attacks.rows == 0 || real_benign.rows == 0)
    throw DataError("evaluate_evasion: empty evaluation inputs");
  if (generated_attacks.cols != real_benign.cols)
    throw DataError("evaluate_evasion: feature width mismatch");

  EvasionReport report;
  for (const auto& [name, model] : models) {
    EvasionRow row;
    row.classifier = name;
    for (std::size_t r = 0; r < generated_attacks.rows; ++r) {
      if (model->predict(generated_attacks.row(r)) == 1)
        ++row.cm.tp;
      else
        ++row.cm.fn;
    }
    for (std::size_t r = 0; r < real_benign.rows; ++r) {
      if (model->predict(real_benign.row(r)) == 1)
        ++row.cm.fp;
      else
        ++row.cm.tn;
    }
    row.dr = double(row.cm.tp) / double(row.cm.tp + row.cm.fn);
    row.asr = 1.0 - row.dr;
    row.f1 = row.cm.f1();
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace qcgan::ids
