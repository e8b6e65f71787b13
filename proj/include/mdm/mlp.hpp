#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdm/domain.hpp"

namespace mdm {

enum class Activation : std::uint32_t { Tanh = 0, SiLU = 1 };

std::string to_string(Activation a);

/// Shape of the noise-prediction network: [y, time features] -> hidden
/// layers -> noise estimate with the same dimension as y.
struct MlpArch {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths{32, 32};
  std::size_t time_embedding_dim = 8;
  Activation activation = Activation::Tanh;
  int steps = 1000;  // T, used to normalise the step index

  void validate() const;
  std::size_t parameter_count() const;
  /// Layer sizes including the input (y + time features) and output layers.
  std::vector<std::size_t> layer_sizes() const;
  bool operator==(const MlpArch&) const = default;
};

/// Sinusoidal features sin/cos(pi 2^j k/T).
std::vector<double> time_embedding(int k, int steps, std::size_t dim);

struct MlpGradient {
  double loss = 0.0;
  std::vector<double> params;
};

/// Fully connected network with hand-written backpropagation. Parameters are
/// stored flat, per layer W (row-major, out x in) followed by b.
class Mlp {
 public:
  explicit Mlp(MlpArch arch);
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp initialized(MlpArch arch, std::uint64_t seed);

  const MlpArch& arch() const { return arch_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Predicted noise for dual point y at step k.
  std::vector<double> forward(std::span<const double> y, int k) const;

  /// Mean over the batch of ||forward(y_b, k_b) - noise_b||^2 and its exact
  /// gradient with respect to every parameter.
  MlpGradient loss_and_grad(const Matrix& y, std::span<const int> k,
                            const Matrix& noise) const;
  double loss(const Matrix& y, std::span<const int> k, const Matrix& noise) const;

 private:
  struct Layer {
    std::size_t in, out, w_offset, b_offset;
  };
  void check_input(std::span<const double> y, int k) const;

  MlpArch arch_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

}  // namespace mdm
