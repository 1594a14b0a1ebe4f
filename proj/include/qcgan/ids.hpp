#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qcgan/common.hpp"
#include "qcgan/neural.hpp"

// Surrogate intrusion-detection classifiers (random forest, second-order
// gradient-boosted trees, small 1-D CNN) and the evasion evaluation protocol.
// Label convention: 1 = attack (positive class), 0 = benign.

namespace qcgan::ids {

struct Labeled {
  Mat x;
  std::vector<int> y;

  std::size_t rows() const { return x.rows; }
  void validate() const;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual double predict_proba(std::span<const double> row) const = 0;
  // Probability >= 0.5 -> attack; ties go to the attack class.
  int predict(std::span<const double> row) const { return predict_proba(row) >= 0.5; }
};

double accuracy(const Classifier& model, const Labeled& data);

// ---- Random forest -------------------------------------------------------

struct ForestParams {
  int n_trees = 100;
  int max_depth = 12;  // depth 0 = single majority-vote leaf
  int min_samples_split = 2;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;  // leaf: attack fraction (RF) or additive weight (boosting)
};

class RandomForest : public Classifier {
 public:
  // CART with Gini splits, bootstrap rows, sqrt(d) feature subsampling.
  static RandomForest train(const Labeled& data, const ForestParams& params);
  double predict_proba(std::span<const double> row) const override;
  // Normalized mean-decrease-of-impurity importances.
  const Vec& feature_importances() const { return importances_; }
  const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }

 private:
  std::vector<std::vector<TreeNode>> trees_;
  Vec importances_;
};

// ---- Gradient-boosted trees (XGBoost-style second-order) ------------------

struct BoostParams {
  int rounds = 200;
  int max_depth = 3;
  double lambda = 1.0;       // L2 on leaf weights
  double learning_rate = 0.1;
};

class BoostedTrees : public Classifier {
 public:
  // Logistic loss; leaf weight -G/(H+lambda); exact greedy splits.
  static BoostedTrees train(const Labeled& data, const BoostParams& params);
  double predict_proba(std::span<const double> row) const override;
  double raw_score(std::span<const double> row) const;
  const Vec& train_logloss() const { return train_logloss_; }  // one entry per round
  const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }

 private:
  std::vector<std::vector<TreeNode>> trees_;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  Vec train_logloss_;
};

// ---- 1-D convolutional net -------------------------------------------------

struct CnnParams {
  int channels = 16;
  int kernel = 2;
  int epochs = 40;
  std::size_t batch_size = 32;
  double lr = 5e-3;
  std::uint64_t seed = 0;
};

// conv(kernel 2, 16 channels, ReLU) -> global average pool -> dense -> sigmoid,
// trained with cross-entropy and Adam.
class Cnn1d : public Classifier {
 public:
  static Cnn1d train(const Labeled& data, const CnnParams& params);
  double predict_proba(std::span<const double> row) const override;

  // Exposed for gradient tests.
  struct ParamsView {
    Mat conv_w;   // channels x kernel
    Vec conv_b;   // channels
    Vec head_w;   // channels
    double head_b = 0.0;
  };
  Cnn1d() = default;
  Cnn1d(int input_len, const ParamsView& p);
  const ParamsView& params() const { return p_; }

  // Mean cross-entropy over the batch plus exact gradients (same layout as
  // ParamsView, flattened conv_w | conv_b | head_w | head_b).
  static double loss_and_grad(const Cnn1d& net, const Labeled& batch, Vec& grad);
  Vec flat_params() const;
  void set_flat_params(std::span<const double> flat);

 private:
  int input_len_ = 4;
  ParamsView p_;
};

// ---- Evasion protocol ------------------------------------------------------

struct EvasionProtocol {
  std::size_t train_per_class = 8000;  // balanced real training rows per class
  std::size_t eval_per_side = 8000;    // generated attacks and real benign rows
  std::uint64_t seed = 0;
};

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double f1() const;
};

struct EvasionRow {
  std::string classifier;
  double dr = 0.0;   // detected generated attacks / total generated attacks
  double asr = 0.0;  // 1 - dr, exact
  double f1 = 0.0;
  ConfusionMatrix cm;
};

struct EvasionReport {
  std::vector<EvasionRow> rows;
};

// Evaluates classifiers on generated attack rows (positive) paired with real
// benign rows (negative).
EvasionReport evaluate_evasion(
    const std::vector<std::pair<std::string, const Classifier*>>& models,
    const Mat& generated_attacks, const Mat& real_benign);

}  // namespace qcgan::ids
