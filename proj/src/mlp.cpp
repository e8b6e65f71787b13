#include "mdm/mlp.hpp"

#include <cmath>
#include <numbers>

#include "mdm/errors.hpp"
#include "mdm/random.hpp"

namespace mdm {

namespace {

inline double activate(Activation a, double z) {
  if (a == Activation::Tanh) return std::tanh(z);
  return z / (1.0 + std::exp(-z));
}

// Derivative expressed through the pre-activation z and the output a.
inline double activate_grad(Activation act, double z, double a) {
  if (act == Activation::Tanh) return 1.0 - a * a;
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "silu";
}

void MlpArch::validate() const {
  if (input_dim == 0) throw ConfigError("model input dimension must be at least 1");
  for (std::size_t w : hidden_widths)
    if (w == 0) throw ConfigError("model.hidden_widths entries must be at least 1");
  if (steps < 1) throw ConfigError("model step count T must be at least 1");
}

std::vector<std::size_t> MlpArch::layer_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.push_back(input_dim + time_embedding_dim);
  for (std::size_t w : hidden_widths) sizes.push_back(w);
  sizes.push_back(input_dim);
  return sizes;
}

std::size_t MlpArch::parameter_count() const {
  const auto sizes = layer_sizes();
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) n += sizes[l] * sizes[l - 1] + sizes[l];
  return n;
}

std::vector<double> time_embedding(int k, int steps, std::size_t dim) {
  const double t = static_cast<double>(k) / static_cast<double>(steps);
  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double freq = std::numbers::pi * std::ldexp(1.0, static_cast<int>(j / 2));
    out[j] = (j % 2 == 0) ? std::sin(freq * t) : std::cos(freq * t);
  }
  return out;
}

Mlp::Mlp(MlpArch arch) : arch_(std::move(arch)) {
  arch_.validate();
  const auto sizes = arch_.layer_sizes();
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    Layer layer{sizes[l - 1], sizes[l], offset, offset + sizes[l] * sizes[l - 1]};
    offset = layer.b_offset + layer.out;
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
}

Mlp Mlp::initialized(MlpArch arch, std::uint64_t seed) {
  Mlp m(std::move(arch));
  CounterRng rng(seed, 0, 0, StreamTag::Init);
  for (const Layer& layer : m.layers_) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i)
      m.params_[layer.w_offset + i] = bound * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

void Mlp::check_input(std::span<const double> y, int k) const {
  if (y.size() != arch_.input_dim)
    throw ShapeError("mlp: input has dimension " + std::to_string(y.size()) +
                     ", model expects " + std::to_string(arch_.input_dim));
  if (k < 0 || k > arch_.steps)
    throw IndexError("mlp: step " + std::to_string(k) + " outside [0, T]");
}

std::vector<double> Mlp::forward(std::span<const double> y, int k) const {
  check_input(y, k);
  std::vector<double> a(y.begin(), y.end());
  const auto emb = time_embedding(k, arch_.steps, arch_.time_embedding_dim);
  a.insert(a.end(), emb.begin(), emb.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    const bool last = l + 1 == layers_.size();
    std::vector<double> z(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* w = params_.data() + L.w_offset + o * L.in;
      double s = params_[L.b_offset + o];
      for (std::size_t i = 0; i < L.in; ++i) s += w[i] * a[i];
      z[o] = last ? s : activate(arch_.activation, s);
    }
    a = std::move(z);
  }
  return a;
}

MlpGradient Mlp::loss_and_grad(const Matrix& y, std::span<const int> k,
                               const Matrix& noise) const {
  if (y.rows == 0) throw ShapeError("mlp_backward: empty batch");
  if (y.rows != k.size() || noise.rows != y.rows || noise.cols != y.cols ||
      y.cols != arch_.input_dim)
    throw ShapeError("mlp_backward: batch shapes disagree");

  MlpGradient g;
  g.params.assign(params_.size(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(y.rows);
  const std::size_t n_layers = layers_.size();
  std::vector<std::vector<double>> acts(n_layers + 1), pre(n_layers);

  for (std::size_t b = 0; b < y.rows; ++b) {
    check_input(y.row(b), k[b]);
    auto& a0 = acts[0];
    a0.assign(y.row(b).begin(), y.row(b).end());
    const auto emb = time_embedding(k[b], arch_.steps, arch_.time_embedding_dim);
    a0.insert(a0.end(), emb.begin(), emb.end());

    for (std::size_t l = 0; l < n_layers; ++l) {
      const Layer& L = layers_[l];
      const bool last = l + 1 == n_layers;
      pre[l].resize(L.out);
      acts[l + 1].resize(L.out);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double* w = params_.data() + L.w_offset + o * L.in;
        double s = params_[L.b_offset + o];
        for (std::size_t i = 0; i < L.in; ++i) s += w[i] * acts[l][i];
        pre[l][o] = s;
        acts[l + 1][o] = last ? s : activate(arch_.activation, s);
      }
    }

    std::vector<double> delta(arch_.input_dim);
    const auto& out = acts[n_layers];
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double r = out[i] - noise(b, i);
      g.loss += r * r * inv_batch;
      delta[i] = 2.0 * r * inv_batch;
    }

    for (std::size_t l = n_layers; l-- > 0;) {
      const Layer& L = layers_[l];
      const auto& a_in = acts[l];
      double* gw = g.params.data() + L.w_offset;
      double* gb = g.params.data() + L.b_offset;
      for (std::size_t o = 0; o < L.out; ++o) {
        gb[o] += delta[o];
        double* row = gw + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) row[i] += delta[o] * a_in[i];
      }
      if (l == 0) break;
      std::vector<double> prev(L.in, 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double* w = params_.data() + L.w_offset + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) prev[i] += w[i] * delta[o];
      }
      for (std::size_t i = 0; i < L.in; ++i)
        prev[i] *= activate_grad(arch_.activation, pre[l - 1][i], a_in[i]);
      delta = std::move(prev);
    }
  }
  return g;
}

double Mlp::loss(const Matrix& y, std::span<const int> k, const Matrix& noise) const {
  if (y.rows == 0) throw ShapeError("mlp loss: empty batch");
  double total = 0.0;
  for (std::size_t b = 0; b < y.rows; ++b) {
    const auto out = forward(y.row(b), k[b]);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double r = out[i] - noise(b, i);
      total += r * r;
    }
  }
  return total / static_cast<double>(y.rows);
}

}  // namespace mdm
