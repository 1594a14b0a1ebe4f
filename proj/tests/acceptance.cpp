// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The desk-scale convergence criterion trains three generators and
// dominates the runtime (several minutes).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "qcgan/datapipe.hpp"
#include "qcgan/experiment.hpp"
#include "qcgan/gan.hpp"
#include "qcgan/ids.hpp"
#include "qcgan/metrics.hpp"
#include "qcgan/neural.hpp"
#include "qcgan/qgen.hpp"
#include "qcgan/qsim.hpp"

using namespace qcgan;

namespace {

constexpr double kPi = std::numbers::pi;
int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s — %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---- criterion 1: quantum correctness ---------------------------------------

void quantum_correctness() {
  double kraus_worst = 0.0;
  {
    Rng rng(101);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
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
        kraus_worst = std::max({kraus_worst, std::abs(sum[0] - cplx{1, 0}),
                                std::abs(sum[1]), std::abs(sum[2]),
                                std::abs(sum[3] - cplx{1, 0})});
      }
    }
  }

  double backend_worst = 0.0;
  {
    Rng rng(102);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_int_distribution<int> qubit(0, 3);
    std::uniform_int_distribution<int> kind(0, 3);
    for (int trial = 0; trial < 100; ++trial) {
      auto pure = qsim::init_ground(4, qsim::Backend::Pure);
      auto mixed = qsim::init_ground(4, qsim::Backend::Mixed);
      for (int g = 0; g < 24; ++g) {
        qsim::GateOp op;
        const int k = kind(rng);
        if (k == 3) {
          const int c = qubit(rng);
          op = qsim::GateOp::cnot(c, (c + 1) % 4);
        } else {
          op = {qsim::GateKind(k), qubit(rng), -1, angle(rng)};
        }
        apply_gate(pure, op);
        apply_gate(mixed, op);
      }
      for (int q = 0; q < 4; ++q)
        backend_worst = std::max(
            backend_worst, std::abs(expect_z(pure, q) - expect_z(mixed, q)));
    }
  }

  double encode_worst = 0.0;
  {
    Rng rng(103);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      Vec z(4);
      for (auto& v : z) v = uni(rng);
      auto state = qsim::init_ground(4, qsim::Backend::Pure);
      qgen::encode(state, z);
      for (int q = 0; q < 4; ++q)
        encode_worst = std::max(
            encode_worst, std::abs(qsim::expect_z(state, q) - std::cos(kPi * z[q])));
    }
  }

  report("quantum-correctness",
         kraus_worst < 1e-12 && backend_worst < 1e-9 && encode_worst < 1e-10,
         "kraus residual " + fmt(kraus_worst) + ", backend gap " + fmt(backend_worst) +
             ", encoding gap " + fmt(encode_worst));
}

// ---- criterion 2: gradient suite ---------------------------------------------

// FD probes are valid only while both perturbed evaluations stay on the same
// LeakyReLU linear piece; probes that cross a kink are skipped.
std::vector<bool> leaky_signs(neural::DiffNet& net, const Mat& input) {
  neural::ForwardCache cache;
  neural::forward(net, input, neural::Mode::Eval, nullptr, &cache);
  std::vector<bool> signs;
  for (std::size_t li = 0; li < net.layers.size(); ++li)
    if (net.layers[li].cfg.act == neural::Activation::LeakyRelu)
      for (double z : cache.preact[li].data) signs.push_back(z > 0.0);
  return signs;
}

double check_net_fd(neural::DiffNet& net, const Mat& input, std::size_t param_stride) {
  neural::ForwardCache cache;
  const Mat out = neural::forward(net, input, neural::Mode::Eval, nullptr, &cache);
  Mat ones(out.rows, out.cols, 1.0);
  const auto grads = neural::backward(net, cache, ones);
  const Vec flat = grads.flat();

  auto sum_out = [&](const Mat& x) {
    const Mat y = neural::forward(net, x, neural::Mode::Eval, nullptr);
    double s = 0.0;
    for (double v : y.data) s += v;
    return s;
  };

  double worst = 0.0;
  Vec params = net.parameters();
  const double h = 1e-4;
  for (std::size_t i = 0; i < params.size(); i += param_stride) {
    Vec bumped = params;
    bumped[i] += h;
    net.set_parameters(bumped);
    const double plus = sum_out(input);
    const auto signs_plus = leaky_signs(net, input);
    bumped[i] -= 2 * h;
    net.set_parameters(bumped);
    const double minus = sum_out(input);
    const auto signs_minus = leaky_signs(net, input);
    net.set_parameters(params);
    if (signs_plus != signs_minus) continue;
    const double fd = (plus - minus) / (2 * h);
    worst = std::max(worst, std::abs(fd - flat[i]) / std::max(1.0, std::abs(fd)));
  }
  for (std::size_t r = 0; r < input.rows; ++r)
    for (std::size_t c = 0; c < input.cols; ++c) {
      Mat bumped = input;
      bumped(r, c) += h;
      const double plus = sum_out(bumped);
      const auto signs_plus = leaky_signs(net, bumped);
      bumped(r, c) -= 2 * h;
      const double minus = sum_out(bumped);
      const auto signs_minus = leaky_signs(net, bumped);
      if (signs_plus != signs_minus) continue;
      const double fd = (plus - minus) / (2 * h);
      worst =
          std::max(worst, std::abs(fd - grads.dInput(r, c)) / std::max(1.0, std::abs(fd)));
    }
  return worst;
}

void gradient_suite() {
  // parameter shift vs central finite differences, clean and noisy
  double shift_worst = 0.0;
  {
    const qgen::CircuitConfig config;  // N=4, K=3, L=2
    Rng rng(201);
    std::uniform_real_distribution<double> angle(-1.5, 1.5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double h = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
      const qsim::NoiseSpec noise =
          trial % 2 ? qsim::NoiseSpec::hardware_proxy() : qsim::NoiseSpec{};
      Vec theta(config.param_count());
      for (auto& t : theta) t = angle(rng);
      Vec z(4), down(4);
      for (auto& v : z) v = uni(rng);
      for (auto& v : down) v = uni(rng);
      const Vec ps = qgen::parameter_shift_grad(config, theta, z, noise, down);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        Vec shifted(theta);
        shifted[j] += h;
        const Vec plus = qgen::generate(config, shifted, z, noise);
        shifted[j] -= 2 * h;
        const Vec minus = qgen::generate(config, shifted, z, noise);
        double fd = 0.0;
        for (int q = 0; q < 4; ++q) fd += down[q] * (plus[q] - minus[q]) / (2 * h);
        shift_worst =
            std::max(shift_worst, std::abs(fd - ps[j]) / std::max(1.0, std::abs(fd)));
      }
    }
  }

  // classical nets: parameter and input gradients for every architecture
  double net_worst = 0.0;
  {
    Rng rng(202);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto random_input = [&](std::size_t rows, std::size_t cols) {
      Mat m(rows, cols);
      for (auto& v : m.data) v = uni(rng);
      return m;
    };
    auto critic = neural::DiffNet::critic();
    critic.init_glorot(rng);
    for (auto& l : critic.layers) neural::spectral_normalize(l);
    net_worst = std::max(net_worst, check_net_fd(critic, random_input(3, 4), 97));
    auto vanilla = neural::DiffNet::critic_vanilla();
    vanilla.init_glorot(rng);
    net_worst = std::max(net_worst, check_net_fd(vanilla, random_input(3, 4), 97));
    auto post = neural::DiffNet::post_processor();
    post.init_glorot(rng);
    net_worst = std::max(net_worst, check_net_fd(post, random_input(3, 4), 5));
    auto classical = neural::DiffNet::classical_generator();
    classical.init_glorot(rng);
    net_worst = std::max(net_worst, check_net_fd(classical, random_input(3, 4), 13));

    // gradient-penalty input-gradient path: FD of the penalty value itself
    const Mat x = random_input(4, 4);
    const auto penalty = neural::grad_norm_penalty(critic, x);
    const Vec pgrads = penalty.grads.flat();
    Vec params = critic.parameters();
    const double h = 1e-5;
    for (std::size_t i = 0; i < params.size(); i += 211) {
      Vec bumped = params;
      bumped[i] += h;
      critic.set_parameters(bumped);
      const double plus = neural::grad_norm_penalty(critic, x).value;
      const auto signs_plus = leaky_signs(critic, x);
      bumped[i] -= 2 * h;
      critic.set_parameters(bumped);
      const double minus = neural::grad_norm_penalty(critic, x).value;
      const auto signs_minus = leaky_signs(critic, x);
      critic.set_parameters(params);
      if (signs_plus != signs_minus) continue;
      const double fd = (plus - minus) / (2 * h);
      net_worst = std::max(net_worst, std::abs(fd - pgrads[i]) / std::max(1.0, std::abs(fd)));
    }
  }

  // CNN1D convolution gradients
  double cnn_worst = 0.0;
  {
    Rng rng(203);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ids::Cnn1d::ParamsView p;
    p.conv_w = Mat(4, 2);
    for (auto& v : p.conv_w.data) v = uni(rng);
    p.conv_b = {0.05, -0.1, 0.2, 0.0};
    p.head_w = {0.4, -0.6, 0.2, 0.3};
    p.head_b = -0.1;
    ids::Cnn1d net(4, p);
    ids::Labeled batch{Mat(8, 4), {0, 1, 0, 1, 1, 0, 1, 0}};
    for (auto& v : batch.x.data) v = uni(rng);
    Vec grad;
    ids::Cnn1d::loss_and_grad(net, batch, grad);
    Vec flat = net.flat_params();
    const double h = 1e-5;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      Vec bumped = flat;
      bumped[i] += h;
      net.set_flat_params(bumped);
      Vec scratch;
      const double plus = ids::Cnn1d::loss_and_grad(net, batch, scratch);
      bumped[i] -= 2 * h;
      net.set_flat_params(bumped);
      const double minus = ids::Cnn1d::loss_and_grad(net, batch, scratch);
      net.set_flat_params(flat);
      const double fd = (plus - minus) / (2 * h);
      cnn_worst = std::max(cnn_worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd)));
    }
  }

  report("gradient-suite", shift_worst <= 1e-5 && net_worst <= 1e-5 && cnn_worst <= 1e-5,
         "parameter-shift rel " + fmt(shift_worst) + ", nets rel " + fmt(net_worst) +
             ", cnn rel " + fmt(cnn_worst));
}

// ---- criterion 3: parameter budgets -------------------------------------------

void parameter_budgets() {
  const std::size_t critic = neural::DiffNet::critic().parameter_count();
  const std::size_t quantum_default = qgen::CircuitConfig{}.param_count();
  const std::size_t compact = qgen::CircuitConfig::compact16().param_count();
  const std::size_t classical = neural::DiffNet::classical_generator().parameter_count();
  const bool ok = critic == 8961 && quantum_default == 48 && compact == 16 &&
                  std::abs(double(classical) - 1412.0) <= 0.01 * 1412.0;
  report("parameter-budgets", ok,
         "critic " + std::to_string(critic) + ", quantum default " +
             std::to_string(quantum_default) + ", compact16 " + std::to_string(compact) +
             ", classical " + std::to_string(classical) + " (budget 1412 +- 1%)");
}

// ---- criterion 4: WGAN-GP oracles ---------------------------------------------

void wgan_oracles() {
  neural::DiffNet unit;
  unit.layers.push_back(neural::DenseLayer{
      {4, 1, neural::Activation::Identity, 0.2, false, 0.0}, Mat(1, 4), Vec(1, 0.0),
      Vec(1, 1.0), Vec(4, 0.0)});
  for (std::size_t c = 0; c < 4; ++c) unit.layers[0].W(0, c) = 0.5;  // ||w||=1
  Rng rng(401);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Mat batch(32, 4);
  for (auto& v : batch.data) v = uni(rng);
  const auto unit_loss = gan::critic_loss(unit, batch, batch, 10.0, rng);

  neural::DiffNet constant;
  constant.layers.push_back(neural::DenseLayer{
      {4, 1, neural::Activation::Identity, 0.2, false, 0.0}, Mat(1, 4), Vec(1, -0.3),
      Vec(1, 1.0), Vec(4, 0.0)});
  const auto const_loss = gan::critic_loss(constant, batch, batch, 10.0, rng);

  // n_critic counter on a short seeded run
  gan::TrainConfig config;
  config.epochs = 2;
  config.batch_size = 10;
  config.n_critic = 5;
  config.seed = 77;
  config.val_samples = 16;
  const auto raw =
      datapipe::generate_synthetic(datapipe::SyntheticSpec::bimodal(), 400, 7);
  Mat rows = datapipe::matrix_for_label(raw, raw.feature_names, 1);
  for (auto& v : rows.data) v = std::clamp(v, -1.0, 1.0);
  Mat train(150, 4), val(40, 4);
  for (std::size_t r = 0; r < 150; ++r)
    for (std::size_t c = 0; c < 4; ++c) train(r, c) = rows(r, c);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 4; ++c) val(r, c) = rows(150 + r, c);
  const auto result = gan::train(config, {train, val});
  const bool counter_ok =
      result.trace.generator_steps > 0 &&
      result.trace.critic_steps == 5 * result.trace.generator_steps;

  report("wgan-gp-oracles",
         std::abs(unit_loss.loss) < 1e-9 && std::abs(const_loss.loss - 10.0) < 1e-9 &&
             counter_ok,
         "unit-critic loss " + fmt(unit_loss.loss) + ", constant-critic loss " +
             fmt(const_loss.loss) + ", critic/generator steps " +
             std::to_string(result.trace.critic_steps) + "/" +
             std::to_string(result.trace.generator_steps));
}

// ---- criterion 5: desk-scale convergence ---------------------------------------

struct ConvergenceData {
  Mat train, val;
};

ConvergenceData convergence_data() {
  // 2,000 bimodal 4-feature rows, split 1600/400
  const auto raw =
      datapipe::generate_synthetic(datapipe::SyntheticSpec::bimodal(), 2000, 4242);
  Mat rows = raw.matrix(raw.feature_names);
  for (auto& v : rows.data) v = std::clamp(v, -1.0, 1.0);
  ConvergenceData data{Mat(1600, 4), Mat(400, 4)};
  for (std::size_t r = 0; r < 1600; ++r)
    for (std::size_t c = 0; c < 4; ++c) data.train(r, c) = rows(r, c);
  for (std::size_t r = 0; r < 400; ++r)
    for (std::size_t c = 0; c < 4; ++c) data.val(r, c) = rows(1600 + r, c);
  return data;
}

gan::TrainConfig convergence_config(gan::GeneratorKind kind) {
  gan::TrainConfig config;
  config.kind = kind;
  config.epochs = 30;
  config.batch_size = 25;
  config.n_critic = 5;
  config.seed = 2024;
  config.val_samples = 400;
  config.lr_critic = 2e-3;
  config.lr_generator = 2e-3;
  config.lr_quantum = 0.05;
  config.noise = qsim::NoiseSpec::hardware_proxy();
  return config;
}

void desk_scale_convergence() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const ConvergenceData data = convergence_data();
  const gan::Datasets sets{data.train, data.val};

  const auto classical =
      gan::train(convergence_config(gan::GeneratorKind::Classical), sets);
  const double classical_initial = classical.trace.initial_mmd;
  const double classical_final = classical.trace.epochs.back().val_mmd;
  const bool classical_ok = classical_final <= 0.2 * classical_initial;

  const auto clean = gan::train(convergence_config(gan::GeneratorKind::Quantum), sets);
  Vec ma;
  {
    const auto& es = clean.trace.epochs;
    for (std::size_t k = 0; k + 5 <= es.size(); ++k) {
      double s = 0.0;
      for (std::size_t j = k; j < k + 5; ++j) s += es[j].val_mmd;
      ma.push_back(s / 5.0);
    }
  }
  bool ma_decreasing = ma.size() >= 2 && ma.back() < ma.front();
  const double slack = 0.01 * clean.trace.initial_mmd;
  for (std::size_t k = 1; k < ma.size(); ++k)
    if (ma[k] > ma[k - 1] + slack) ma_decreasing = false;
  const auto collapse = gan::mode_collapse_monitor(clean.trace);
  const bool clean_ok = ma_decreasing && collapse.flagged_epochs.empty();

  const auto noisy =
      gan::train(convergence_config(gan::GeneratorKind::QuantumNoisy), sets);
  const double clean_final = clean.trace.epochs.back().val_mmd;
  const double noisy_final = noisy.trace.epochs.back().val_mmd;
  const bool noisy_ok = noisy_final <= 1.5 * clean_final;

  const double seconds =
      std::chrono::duration<double>(clock::now() - t0).count();
  report("desk-scale-convergence", classical_ok && clean_ok && noisy_ok,
         "classical " + fmt(classical_initial) + "->" + fmt(classical_final) +
             " (need <=0.2x), clean QC MA5 " +
             std::string(ma_decreasing ? "decreasing" : "NOT decreasing") + " with " +
             std::to_string(collapse.flagged_epochs.size()) +
             " collapse flags, noisy/clean final " + fmt(noisy_final) + "/" +
             fmt(clean_final) + " (need <=1.5x); " + fmt(seconds) + "s");
}

// ---- criterion 6: metric oracles ------------------------------------------------

void metric_oracles() {
  Rng rng(601);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Mat x(300, 4);
  for (auto& v : x.data) v = uni(rng);
  Mat shifted = x;
  for (auto& v : shifted.data) v += 0.37;

  const double wd0 = metrics::wasserstein_per_feature(x, x);
  const double mse0 = metrics::mse_quantile_paired(x, x);
  const double kl0 = metrics::kl_histogram(x, x);
  const double mmd0 = metrics::mmd(x, x);
  const double wd_shift = std::abs(metrics::wasserstein_per_feature(x, shifted) - 0.37);

  // permutation null for the MMD
  Mat pool(200, 4);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : pool.data) v = normal(rng);
  Mat a(100, 4), b(100, 4);
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      a(r, c) = pool(r, c);
      b(r, c) = pool(100 + r, c);
    }
  const double observed = metrics::mmd(a, b);
  std::vector<double> null_stats;
  std::vector<std::size_t> idx(200);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int perm = 0; perm < 200; ++perm) {
    std::shuffle(idx.begin(), idx.end(), rng);
    Mat pa(100, 4), pb(100, 4);
    for (std::size_t r = 0; r < 100; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        pa(r, c) = pool(idx[r], c);
        pb(r, c) = pool(idx[100 + r], c);
      }
    null_stats.push_back(metrics::mmd(pa, pb));
  }
  std::sort(null_stats.begin(), null_stats.end());
  const bool perm_ok = observed <= null_stats[std::size_t(0.95 * null_stats.size())];

  report("metric-oracles",
         wd0 == 0.0 && mse0 == 0.0 && kl0 <= 1e-6 && mmd0 <= 0.01 && wd_shift <= 1e-9 &&
             perm_ok,
         "WD0 " + fmt(wd0) + ", MSE0 " + fmt(mse0) + ", KL0 " + fmt(kl0) + ", MMD0 " +
             fmt(mmd0) + ", |WD shift - c| " + fmt(wd_shift) + ", permutation " +
             (perm_ok ? "ok" : "FAILED"));
}

// ---- criterion 7: IDS harness sanity ----------------------------------------------

void ids_sanity() {
  const auto raw_train =
      datapipe::generate_synthetic(datapipe::SyntheticSpec::separable(6.0), 1200, 71);
  const auto raw_test =
      datapipe::generate_synthetic(datapipe::SyntheticSpec::separable(6.0), 800, 72);
  const ids::Labeled train{raw_train.matrix(raw_train.feature_names), raw_train.labels};
  const ids::Labeled test{raw_test.matrix(raw_test.feature_names), raw_test.labels};

  ids::ForestParams fp;
  fp.n_trees = 60;
  const auto rf = ids::RandomForest::train(train, fp);
  ids::BoostParams bp;
  bp.rounds = 100;
  const auto boost = ids::BoostedTrees::train(train, bp);
  ids::CnnParams cp;
  cp.epochs = 30;
  const auto cnn = ids::Cnn1d::train(train, cp);

  const double acc_rf = ids::accuracy(rf, test);
  const double acc_boost = ids::accuracy(boost, test);
  const double acc_cnn = ids::accuracy(cnn, test);

  // exact ASR + DR identity on a real evaluation
  const Mat gen = raw_test.matrix(raw_test.feature_names);
  const auto evasion = ids::evaluate_evasion(
      {{"rf", &rf}, {"xgboost_like", &boost}, {"cnn1d", &cnn}}, gen, test.x);
  bool identity_ok = true;
  for (const auto& row : evasion.rows) identity_ok &= (row.asr + row.dr == 1.0);

  // degenerate confusion arithmetic
  struct Fixed : ids::Classifier {
    double p;
    explicit Fixed(double v) : p(v) {}
    double predict_proba(std::span<const double>) const override { return p; }
  };
  Fixed always_attack(1.0), always_benign(0.0);
  Mat ga(64, 4), be(64, 4);
  const auto degenerate = ids::evaluate_evasion(
      {{"always_attack", &always_attack}, {"always_benign", &always_benign}}, ga, be);
  const bool degenerate_ok =
      degenerate.rows[0].dr == 1.0 && degenerate.rows[0].asr == 0.0 &&
      std::abs(degenerate.rows[0].f1 - 2.0 / 3.0) < 1e-12 &&
      degenerate.rows[1].dr == 0.0 && degenerate.rows[1].asr == 1.0 &&
      degenerate.rows[1].f1 == 0.0;

  report("ids-harness-sanity",
         acc_rf >= 0.95 && acc_boost >= 0.95 && acc_cnn >= 0.95 && identity_ok &&
             degenerate_ok,
         "accuracies rf " + fmt(acc_rf) + ", boost " + fmt(acc_boost) + ", cnn " +
             fmt(acc_cnn) + "; ASR+DR identity " + (identity_ok ? "exact" : "BROKEN") +
             "; degenerate cases " + (degenerate_ok ? "ok" : "BROKEN"));
}

// ---- criterion 8: paper-number reproduction statement -------------------------------

void paper_reproduction() {
  std::printf(
      "    note: Tables 2-3 absolute values (e.g. MMD 0.3619, ASR 0.411 vs the\n"
      "    boosted-tree IDS) are not reproducible at desk scale; they depend on\n"
      "    the full UNSW-NB15 dataset, unstated hyperparameters and stochastic\n"
      "    training. Set QCGAN_UNSW_DIR to the directory holding the official\n"
      "    CSV pair to run the qualitative checks instead.\n");
  const char* dir = std::getenv("QCGAN_UNSW_DIR");
  if (!dir) {
    report("paper-number-reproduction", true,
           "statement acknowledged; real dataset not supplied");
    return;
  }

  namespace fs = std::filesystem;
  const std::string train_csv = std::string(dir) + "/UNSW_NB15_training-set.csv";
  const std::string test_csv = std::string(dir) + "/UNSW_NB15_testing-set.csv";
  if (!fs::exists(train_csv) || !fs::exists(test_csv)) {
    report("paper-number-reproduction", false,
           "QCGAN_UNSW_DIR set but CSV pair not found under " + std::string(dir));
    return;
  }

  const std::string out = "unsw_acceptance_out";
  nlohmann::json config = {
      {"version", 1},
      {"seed", 7},
      {"out_dir", out},
      {"data", {{"source", "csv"}, {"csv", {{"paths", {test_csv, train_csv}}}}}},
      {"features", {{"mode", "select"}}},
      {"train",
       {{"epochs", 3}, {"batch_size", 64}, {"n_critic", 5}, {"val_samples", 256},
        {"lr_critic", 2e-3}, {"lr_generator", 2e-3}, {"lr_quantum", 0.05}}},
      {"ids", {{"train_per_class", 8000}, {"eval_per_side", 8000}}},
      {"report", {{"generated_rows", 8000}}}};
  const auto cfg = experiment::ExperimentConfig::from_json(config);

  try {
    experiment::cmd_prepare(cfg);
    std::ifstream sidecar_in(out + "/prepared/sidecar.json");
    nlohmann::json sidecar;
    sidecar_in >> sidecar;
    auto selected = sidecar.at("selected_features").get<std::vector<std::string>>();
    std::sort(selected.begin(), selected.end());
    const std::vector<std::string> expected = {"ct_state_ttl", "sbytes", "smean",
                                               "synack"};
    const bool features_ok = selected == expected;
    const bool sizes_ok = sidecar.at("row_counts").at("train") == 67512 &&
                          sidecar.at("row_counts").at("val") == 14820 &&
                          sidecar.at("row_counts").at("test") == 175341;

    std::vector<std::string> checkpoints;
    for (auto kind : {gan::GeneratorKind::Classical, gan::GeneratorKind::Quantum,
                      gan::GeneratorKind::QuantumNoisy}) {
      experiment::cmd_train(cfg, kind);
      checkpoints.push_back(experiment::run_dir(cfg, kind) + "/checkpoint.json");
    }
    experiment::cmd_report(cfg, checkpoints);
    std::ifstream report_in(out + "/report/report.json");
    nlohmann::json rep;
    report_in >> rep;
    bool asr_ok = true;
    for (const auto& model : rep.at("models"))
      for (const auto& row : model.at("evasion"))
        asr_ok &= row.at("asr").get<double>() > 0.05;

    report("paper-number-reproduction", features_ok && sizes_ok && asr_ok,
           std::string("features ") + (features_ok ? "match" : "MISMATCH") +
               ", split sizes " + (sizes_ok ? "match" : "MISMATCH") + ", ASR>0.05 " +
               (asr_ok ? "holds" : "VIOLATED"));
  } catch (const std::exception& e) {
    report("paper-number-reproduction", false, std::string("failed: ") + e.what());
  }
}

}  // namespace

int main() {
  quantum_correctness();
  gradient_suite();
  parameter_budgets();
  wgan_oracles();
  metric_oracles();
  ids_sanity();
  desk_scale_convergence();
  paper_reproduction();
  std::printf("%d criterion failure(s)\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
