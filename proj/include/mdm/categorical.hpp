#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdm/domain.hpp"
#include "mdm/mirror.hpp"

namespace mdm {

class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> labels);
  /// Labels "0", "1", ..., "d-1".
  static Vocabulary indexed(std::size_t d);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

/// Token indices of shape (batch, length), row-major.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t vocab = 0;
  std::vector<int> tokens;

  SequenceBatch() = default;
  /// IndexError on tokens outside [0, vocab); ShapeError on a size mismatch.
  SequenceBatch(std::size_t batch, std::size_t length, std::size_t vocab,
                std::vector<int> tokens);

  int at(std::size_t b, std::size_t l) const { return tokens[b * length + l]; }
  std::span<const int> row(std::size_t b) const { return {tokens.data() + b * length, length}; }
};

/// Values of shape (batch, length, vocab). One position is a length-`vocab`
/// slice; one sequence flattens to a row of length * vocab values, which is
/// the dual vector the diffusion works on.
struct SequenceTensor {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t vocab = 0;
  std::vector<double> data;

  SequenceTensor() = default;
  SequenceTensor(std::size_t b, std::size_t l, std::size_t v)
      : batch(b), length(l), vocab(v), data(b * l * v, 0.0) {}

  std::span<double> position(std::size_t b, std::size_t l) {
    return {data.data() + (b * length + l) * vocab, vocab};
  }
  std::span<const double> position(std::size_t b, std::size_t l) const {
    return {data.data() + (b * length + l) * vocab, vocab};
  }

  Matrix flatten() const;
  static SequenceTensor from_flat(const Matrix& m, std::size_t length, std::size_t vocab);
};

class CategoricalCodec {
 public:
  static constexpr double kDefaultLogit = 5.0;

  explicit CategoricalCodec(Vocabulary vocab, double k_logit = kDefaultLogit);

  const Vocabulary& vocabulary() const { return vocab_; }
  double k_logit() const { return k_; }

 private:
  Vocabulary vocab_;
  double k_;
};

SequenceTensor encode_onehot(const CategoricalCodec& codec, const SequenceBatch& batch);

/// k where the one-hot entry is 1, -k elsewhere. EncodingError if a position
/// is not one-hot.
SequenceTensor shift_scale(const CategoricalCodec& codec, const SequenceTensor& onehot);

/// clamp_to_interior then grad of a negative-entropy map, position by position.
SequenceTensor mirror_encode(const MirrorMap& mm, const SequenceTensor& onehot);

enum class DecodeKind { Argmax, TopK };

struct DecodeStrategy {
  DecodeKind kind = DecodeKind::Argmax;
  std::size_t k_samples = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  static DecodeStrategy argmax() { return {}; }
  static DecodeStrategy top_k(std::size_t k, double temperature, std::uint64_t seed) {
    return {DecodeKind::TopK, k, temperature, seed};
  }
};

/// Whether decode() receives logits (dual values) or probabilities.
enum class TensorSpace { Dual, Simplex };

/// Argmax picks the largest entry per position, lowest index on ties. TopK
/// samples from the softmax of the k largest logits divided by temperature;
/// position (b, l) draws from CounterRng(seed, b, l).
SequenceBatch decode(const CategoricalCodec& codec, const SequenceTensor& values,
                     const DecodeStrategy& strategy = {},
                     TensorSpace space = TensorSpace::Dual);

enum class ToyKind { ConstantToken, AlternatingPair, MarkovChain };

struct ToyDatasetSpec {
  ToyKind kind = ToyKind::ConstantToken;
  int token = 0;        // ConstantToken
  Matrix transition;    // MarkovChain, vocab x vocab, rows summing to 1
  std::uint64_t seed = 0;
};

/// Deterministic synthetic sequences. AlternatingPair alternates tokens 0 and
/// 1 from a uniformly drawn first token; MarkovChain starts from a uniform
/// token. ConfigError on invalid parameters.
SequenceBatch make_toy_dataset(const ToyDatasetSpec& spec, std::size_t vocab,
                               std::size_t length, std::size_t n);

/// One sequence per line, whitespace-separated indices, after a
/// "# vocab=<d> L=<L>" header.
void write_dataset(const std::string& path, const SequenceBatch& batch);
SequenceBatch read_dataset(const std::string& path);

}  // namespace mdm
