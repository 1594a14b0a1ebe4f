#include "qcgan/neural.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace qcgan::neural {

namespace {

// A (m x k) * B^T with B (n x k) -> m x n
Mat matmul_nt(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

// A (m x k) * B (k x n) -> m x n
Mat matmul_nn(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

// A^T (k x m -> m x k transposed) * B (k x n) -> m x n
Mat matmul_tn(const Mat& a, const Mat& b) {
  Mat out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aki * b(k, j);
    }
  return out;
}

double activate(Activation act, double slope, double z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::LeakyRelu: return z > 0.0 ? z : slope * z;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

double activate_deriv(Activation act, double slope, double z) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::LeakyRelu: return z > 0.0 ? 1.0 : slope;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

double vec_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

DenseLayer make_layer(std::size_t in, std::size_t out, Activation act,
                      bool spectral = false, double dropout = 0.0) {
  DenseLayer layer;
  layer.cfg = {in, out, act, 0.2, spectral, dropout};
  layer.W = Mat(out, in);
  layer.b.assign(out, 0.0);
  layer.u.assign(out, out ? 1.0 / std::sqrt(double(out)) : 0.0);
  layer.v.assign(in, 0.0);
  return layer;
}

}  // namespace

std::size_t DiffNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

Vec DiffNet::parameters() const {
  Vec flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.W.data.begin(), l.W.data.end());
    flat.insert(flat.end(), l.b.begin(), l.b.end());
  }
  return flat;
}

void DiffNet::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw UsageError("set_parameters: expected " + std::to_string(parameter_count()) +
                     " values, got " + std::to_string(flat.size()));
  std::size_t off = 0;
  for (auto& l : layers) {
    std::copy(flat.begin() + off, flat.begin() + off + l.W.data.size(), l.W.data.begin());
    off += l.W.data.size();
    std::copy(flat.begin() + off, flat.begin() + off + l.b.size(), l.b.begin());
    off += l.b.size();
  }
  ++version;
}

void DiffNet::init_glorot(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& l : layers) {
    const double a = std::sqrt(6.0 / double(l.cfg.in + l.cfg.out));
    std::uniform_real_distribution<double> uni(-a, a);
    for (auto& w : l.W.data) w = uni(rng);
    std::fill(l.b.begin(), l.b.end(), 0.0);
    if (l.cfg.spectral_norm) {
      for (auto& x : l.u) x = normal(rng);
      const double n = vec_norm(l.u);
      if (n > 0) for (auto& x : l.u) x /= n;
    }
  }
  ++version;
}

DiffNet DiffNet::critic(std::size_t input_width) {
  DiffNet net;
  net.layers.push_back(make_layer(input_width, 128, Activation::LeakyRelu, true));
  net.layers.push_back(make_layer(128, 64, Activation::LeakyRelu, true));
  net.layers.push_back(make_layer(64, 1, Activation::Identity, true));
  return net;
}

DiffNet DiffNet::critic_vanilla(std::size_t input_width) {
  DiffNet net;
  net.layers.push_back(make_layer(input_width, 128, Activation::LeakyRelu, false, 0.3));
  net.layers.push_back(make_layer(128, 64, Activation::LeakyRelu, false, 0.3));
  net.layers.push_back(make_layer(64, 1, Activation::Sigmoid));
  return net;
}

DiffNet DiffNet::post_processor(std::size_t width) {
  DiffNet net;
  net.layers.push_back(make_layer(width, 32, Activation::LeakyRelu));
  net.layers.push_back(make_layer(32, width, Activation::Tanh));
  return net;
}

DiffNet DiffNet::classical_generator(std::size_t width) {
  DiffNet net;
  net.layers.push_back(make_layer(width, 33, Activation::LeakyRelu));
  net.layers.push_back(make_layer(33, 33, Activation::LeakyRelu));
  net.layers.push_back(make_layer(33, width, Activation::Tanh));
  return net;
}

double spectral_sigma(const DenseLayer& layer) {
  // sigma = ||W^T u|| with the stored u; equals u^T W v for v = normalized W^T u.
  double s = 0.0;
  for (std::size_t i = 0; i < layer.cfg.in; ++i) {
    double col = 0.0;
    for (std::size_t o = 0; o < layer.cfg.out; ++o) col += layer.W(o, i) * layer.u[o];
    s += col * col;
  }
  return std::sqrt(s);
}

double spectral_normalize(DenseLayer& layer) {
  Vec wu(layer.cfg.in, 0.0);
  for (std::size_t o = 0; o < layer.cfg.out; ++o)
    for (std::size_t i = 0; i < layer.cfg.in; ++i) wu[i] += layer.W(o, i) * layer.u[o];
  const double nv = vec_norm(wu);
  if (nv < 1e-12) {
    static bool warned = false;
    if (!warned) {
      std::fprintf(stderr, "qcgan: spectral_normalize skipped for zero weight matrix\n");
      warned = true;
    }
    return 1.0;
  }
  for (auto& x : wu) x /= nv;
  layer.v = wu;
  Vec wv(layer.cfg.out, 0.0);
  for (std::size_t o = 0; o < layer.cfg.out; ++o)
    for (std::size_t i = 0; i < layer.cfg.in; ++i) wv[o] += layer.W(o, i) * layer.v[i];
  const double nu = vec_norm(wv);
  for (auto& x : wv) x /= nu;
  layer.u = wv;
  return nu;  // u^T W v after the update
}

Mat effective_weight(const DenseLayer& layer) {
  if (!layer.cfg.spectral_norm) return layer.W;
  double sigma = spectral_sigma(layer);
  if (sigma < 1e-12) sigma = 1.0;
  Mat eff = layer.W;
  for (auto& w : eff.data) w /= sigma;
  return eff;
}

Mat forward(const DiffNet& net, const Mat& input, Mode mode, Rng* rng,
            ForwardCache* cache) {
  if (net.layers.empty()) throw UsageError("forward: empty network");
  if (input.cols != net.input_width())
    throw UsageError("forward: input width " + std::to_string(input.cols) +
                     " does not match network input " + std::to_string(net.input_width()));
  if (cache) {
    *cache = ForwardCache{};
    cache->net_version = net.version;
    cache->mode = mode;
  }
  Mat x = input;
  for (const auto& layer : net.layers) {
    double sigma = 1.0;
    Vec v_fwd(layer.cfg.in, 0.0);
    if (layer.cfg.spectral_norm) {
      for (std::size_t o = 0; o < layer.cfg.out; ++o)
        for (std::size_t i = 0; i < layer.cfg.in; ++i)
          v_fwd[i] += layer.W(o, i) * layer.u[o];
      sigma = vec_norm(v_fwd);
      if (sigma > 1e-12) {
        for (auto& t : v_fwd) t /= sigma;
      } else {
        sigma = 1.0;
        std::fill(v_fwd.begin(), v_fwd.end(), 0.0);
      }
    }
    Mat eff = layer.W;
    if (sigma != 1.0)
      for (auto& w : eff.data) w /= sigma;

    Mat z = matmul_nt(x, eff);
    for (std::size_t r = 0; r < z.rows; ++r)
      for (std::size_t c = 0; c < z.cols; ++c) z(r, c) += layer.b[c];

    Mat deriv(z.rows, z.cols);
    Mat a(z.rows, z.cols);
    for (std::size_t i = 0; i < z.data.size(); ++i) {
      a.data[i] = activate(layer.cfg.act, layer.cfg.leaky_slope, z.data[i]);
      deriv.data[i] = activate_deriv(layer.cfg.act, layer.cfg.leaky_slope, z.data[i]);
    }
    if (mode == Mode::Train && layer.cfg.dropout_rate > 0.0) {
      if (!rng) throw UsageError("forward: dropout in train mode needs an rng");
      std::bernoulli_distribution keep(1.0 - layer.cfg.dropout_rate);
      const double scale = 1.0 / (1.0 - layer.cfg.dropout_rate);
      for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double mask = keep(*rng) ? scale : 0.0;
        a.data[i] *= mask;
        deriv.data[i] *= mask;
      }
    }
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preact.push_back(std::move(z));
      cache->deriv.push_back(std::move(deriv));
      cache->eff_w.push_back(std::move(eff));
      cache->sigma.push_back(sigma);
      cache->sn_u.push_back(layer.cfg.spectral_norm ? layer.u : Vec{});
      cache->sn_v.push_back(layer.cfg.spectral_norm ? v_fwd : Vec{});
    }
    x = std::move(a);
  }
  return x;
}

namespace {

// Pulls a gradient w.r.t. the effective weight back through W_eff = W / sigma
// with sigma = u^T W v (u, v fixed):
//   dL/dW = (dL/dW_eff - <dL/dW_eff, W_eff>_F u v^T) / sigma
void spectral_chain(const ForwardCache& cache, std::size_t layer_idx, Mat& dW) {
  const Vec& u = cache.sn_u[layer_idx];
  if (u.empty()) return;  // spectral norm off
  const double sigma = cache.sigma[layer_idx];
  const Vec& v = cache.sn_v[layer_idx];
  const Mat& eff = cache.eff_w[layer_idx];
  double inner = 0.0;
  for (std::size_t i = 0; i < dW.data.size(); ++i) inner += dW.data[i] * eff.data[i];
  for (std::size_t o = 0; o < dW.rows; ++o)
    for (std::size_t i = 0; i < dW.cols; ++i)
      dW(o, i) = (dW(o, i) - inner * u[o] * v[i]) / sigma;
}

}  // namespace

Gradients backward(const DiffNet& net, const ForwardCache& cache, const Mat& dOut) {
  if (cache.net_version != net.version)
    throw UsageError("backward: stale forward cache (parameters changed)");
  if (cache.inputs.size() != net.layers.size())
    throw UsageError("backward: cache does not match network");
  const std::size_t n_layers = net.layers.size();
  Gradients g;
  g.dW.resize(n_layers);
  g.db.resize(n_layers);

  Mat grad_a = dOut;
  for (std::size_t li = n_layers; li-- > 0;) {
    const Mat& deriv = cache.deriv[li];
    if (!grad_a.same_shape(deriv))
      throw UsageError("backward: output gradient shape mismatch");
    Mat grad_z = grad_a;
    for (std::size_t i = 0; i < grad_z.data.size(); ++i) grad_z.data[i] *= deriv.data[i];

    g.dW[li] = matmul_tn(grad_z, cache.inputs[li]);
    g.db[li].assign(net.layers[li].cfg.out, 0.0);
    for (std::size_t r = 0; r < grad_z.rows; ++r)
      for (std::size_t c = 0; c < grad_z.cols; ++c) g.db[li][c] += grad_z(r, c);

    grad_a = matmul_nn(grad_z, cache.eff_w[li]);
    spectral_chain(cache, li, g.dW[li]);
  }
  g.dInput = std::move(grad_a);
  return g;
}

Vec Gradients::flat() const {
  Vec out;
  for (std::size_t li = 0; li < dW.size(); ++li) {
    out.insert(out.end(), dW[li].data.begin(), dW[li].data.end());
    out.insert(out.end(), db[li].begin(), db[li].end());
  }
  return out;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  if (dW.empty()) {
    dW = other.dW;
    db = other.db;
    for (auto& m : dW)
      for (auto& x : m.data) x *= scale;
    for (auto& v : db)
      for (auto& x : v) x *= scale;
    return;
  }
  for (std::size_t li = 0; li < dW.size(); ++li) {
    for (std::size_t i = 0; i < dW[li].data.size(); ++i)
      dW[li].data[i] += scale * other.dW[li].data[i];
    for (std::size_t i = 0; i < db[li].size(); ++i) db[li][i] += scale * other.db[li][i];
  }
}

GradNormPenalty grad_norm_penalty(const DiffNet& net, const Mat& input) {
  for (const auto& l : net.layers)
    if (l.cfg.act != Activation::Identity && l.cfg.act != Activation::LeakyRelu)
      throw UsageError(
          "grad_norm_penalty: requires piecewise-linear activations "
          "(LeakyReLU/identity)");
  if (net.output_width() != 1)
    throw UsageError("grad_norm_penalty: requires a scalar-output network");

  ForwardCache cache;
  forward(net, input, Mode::Eval, nullptr, &cache);
  const std::size_t n_layers = net.layers.size();
  const std::size_t batch = input.rows;

  // delta[i] = d(output)/d(preactivation of layer i), per sample
  std::vector<Mat> delta(n_layers);
  delta[n_layers - 1] = cache.deriv[n_layers - 1];
  for (std::size_t li = n_layers - 1; li-- > 0;) {
    delta[li] = matmul_nn(delta[li + 1], cache.eff_w[li + 1]);
    for (std::size_t i = 0; i < delta[li].data.size(); ++i)
      delta[li].data[i] *= cache.deriv[li].data[i];
  }
  Mat input_grad = matmul_nn(delta[0], cache.eff_w[0]);  // B x in

  GradNormPenalty result;
  result.per_row_norm.resize(batch);
  Vec row_penalties(batch);
  Mat q(batch, input.cols);  // d penalty / d input_grad, already averaged
  for (std::size_t r = 0; r < batch; ++r) {
    const double nrm = vec_norm(input_grad.row(r));
    result.per_row_norm[r] = nrm;
    row_penalties[r] = (nrm - 1.0) * (nrm - 1.0);
    const double coeff = 2.0 * (nrm - 1.0) / (std::max(nrm, 1e-12) * double(batch));
    for (std::size_t c = 0; c < input.cols; ++c) q(r, c) = coeff * input_grad(r, c);
  }
  result.value = mean_of(row_penalties);

  // Reverse pass over the gradient chain. The activation-derivative factors
  // are piecewise constant, so their parameter dependence vanishes a.e. and
  // biases get no penalty gradient.
  result.grads.dW.resize(n_layers);
  result.grads.db.resize(n_layers);
  for (std::size_t li = 0; li < n_layers; ++li)
    result.grads.db[li].assign(net.layers[li].cfg.out, 0.0);

  result.grads.dW[0] = matmul_tn(delta[0], q);  // out0 x in
  Mat delta_bar = matmul_nt(q, cache.eff_w[0]); // B x out0
  for (std::size_t li = 0; li + 1 < n_layers; ++li) {
    Mat c = delta_bar;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= cache.deriv[li].data[i];
    result.grads.dW[li + 1] = matmul_tn(delta[li + 1], c);
    delta_bar = matmul_nt(c, cache.eff_w[li + 1]);
  }
  for (std::size_t li = 0; li < n_layers; ++li)
    spectral_chain(cache, li, result.grads.dW[li]);
  return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw UsageError("adam_step: parameter/gradient/state sizes disagree");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw UsageError("adam_step: non-finite gradient at index " + std::to_string(i) +
                       " (value " + std::to_string(grads[i]) + "); step aborted");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace qcgan::neural
