#include "mdm/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mdm/errors.hpp"
#include "mdm/random.hpp"

namespace mdm {

Vocabulary::Vocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw ConfigError("vocabulary needs at least 2 tokens");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw ConfigError("vocabulary labels must be unique");
}

Vocabulary Vocabulary::indexed(std::size_t d) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < d; ++i) labels.push_back(std::to_string(i));
  return Vocabulary(std::move(labels));
}

SequenceBatch::SequenceBatch(std::size_t b, std::size_t l, std::size_t v, std::vector<int> t)
    : batch(b), length(l), vocab(v), tokens(std::move(t)) {
  if (length < 1) throw ShapeError("sequence length must be at least 1");
  if (tokens.size() != batch * length) throw ShapeError("token count does not match batch x L");
  for (int tok : tokens)
    if (tok < 0 || static_cast<std::size_t>(tok) >= vocab)
      throw IndexError("token " + std::to_string(tok) + " outside vocabulary of size " +
                       std::to_string(vocab));
}

Matrix SequenceTensor::flatten() const {
  Matrix m(batch, length * vocab);
  m.data = data;
  return m;
}

SequenceTensor SequenceTensor::from_flat(const Matrix& m, std::size_t length, std::size_t vocab) {
  if (m.cols != length * vocab) throw ShapeError("flat tensor width is not L * vocab");
  SequenceTensor t(m.rows, length, vocab);
  t.data = m.data;
  return t;
}

CategoricalCodec::CategoricalCodec(Vocabulary vocab, double k_logit)
    : vocab_(std::move(vocab)), k_(k_logit) {
  if (!(k_ > 0.0) || !std::isfinite(k_)) throw ConfigError("k_logit must be finite and positive");
}

SequenceTensor encode_onehot(const CategoricalCodec& codec, const SequenceBatch& batch) {
  const std::size_t d = codec.vocabulary().size();
  SequenceTensor t(batch.batch, batch.length, d);
  for (std::size_t b = 0; b < batch.batch; ++b)
    for (std::size_t l = 0; l < batch.length; ++l) {
      const int tok = batch.at(b, l);
      if (tok < 0 || static_cast<std::size_t>(tok) >= d)
        throw IndexError("token " + std::to_string(tok) + " outside vocabulary");
      t.position(b, l)[static_cast<std::size_t>(tok)] = 1.0;
    }
  return t;
}

namespace {

void require_onehot(std::span<const double> p) {
  std::size_t ones = 0;
  for (double v : p) {
    if (v == 1.0)
      ++ones;
    else if (v != 0.0)
      throw EncodingError("position is not one-hot");
  }
  if (ones != 1) throw EncodingError("position is not one-hot");
}

}  // namespace

SequenceTensor shift_scale(const CategoricalCodec& codec, const SequenceTensor& onehot) {
  SequenceTensor out = onehot;
  const double k = codec.k_logit();
  for (std::size_t b = 0; b < onehot.batch; ++b)
    for (std::size_t l = 0; l < onehot.length; ++l) {
      require_onehot(onehot.position(b, l));
      for (double& v : out.position(b, l)) v = v == 1.0 ? k : -k;
    }
  return out;
}

SequenceTensor mirror_encode(const MirrorMap& mm, const SequenceTensor& onehot) {
  if (mm.kind() != MirrorKind::NegativeEntropy || mm.dim() != onehot.vocab)
    throw ConfigError("mirror_encode needs a negative-entropy map of the vocabulary size");
  SequenceTensor out = onehot;
  for (std::size_t b = 0; b < onehot.batch; ++b)
    for (std::size_t l = 0; l < onehot.length; ++l) {
      require_onehot(onehot.position(b, l));
      const Vec y = mm.grad(mm.clamp_to_interior(onehot.position(b, l)));
      std::copy(y.begin(), y.end(), out.position(b, l).begin());
    }
  return out;
}

SequenceBatch decode(const CategoricalCodec& codec, const SequenceTensor& values,
                     const DecodeStrategy& strategy, TensorSpace space) {
  const std::size_t d = codec.vocabulary().size();
  if (values.vocab != d) throw ShapeError("tensor vocabulary size does not match the codec");
  if (strategy.kind == DecodeKind::TopK &&
      (strategy.k_samples < 1 || !(strategy.temperature > 0.0)))
    throw ConfigError("top-k decoding needs k >= 1 and a positive temperature");
  std::vector<int> tokens(values.batch * values.length);
  std::vector<std::size_t> order(d);
  Vec logits(d);
  for (std::size_t b = 0; b < values.batch; ++b)
    for (std::size_t l = 0; l < values.length; ++l) {
      const auto p = values.position(b, l);
      for (std::size_t j = 0; j < d; ++j)
        logits[j] = space == TensorSpace::Simplex ? std::log(std::max(p[j], 1e-300)) : p[j];
      int tok = 0;
      if (strategy.kind == DecodeKind::Argmax) {
        tok = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
      } else {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t c) { return logits[a] > logits[c]; });
        const std::size_t k = std::min(strategy.k_samples, d);
        const double top = logits[order[0]];
        Vec w(k);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j)
          total += (w[j] = std::exp((logits[order[j]] - top) / strategy.temperature));
        CounterRng rng(strategy.seed, b, l, StreamTag::Decode);
        double u = rng.uniform() * total;
        std::size_t pick = k - 1;
        for (std::size_t j = 0; j < k; ++j) {
          if (u < w[j]) {
            pick = j;
            break;
          }
          u -= w[j];
        }
        tok = static_cast<int>(order[pick]);
      }
      tokens[b * values.length + l] = tok;
    }
  return SequenceBatch(values.batch, values.length, d, std::move(tokens));
}

SequenceBatch make_toy_dataset(const ToyDatasetSpec& spec, std::size_t vocab,
                               std::size_t length, std::size_t n) {
  if (vocab < 2) throw ConfigError("toy dataset: vocabulary needs at least 2 tokens");
  if (length < 1) throw ConfigError("toy dataset: L must be at least 1");
  if (spec.kind == ToyKind::ConstantToken &&
      (spec.token < 0 || static_cast<std::size_t>(spec.token) >= vocab))
    throw ConfigError("toy dataset: constant token outside the vocabulary");
  if (spec.kind == ToyKind::MarkovChain) {
    const Matrix& P = spec.transition;
    if (P.rows != vocab || P.cols != vocab)
      throw ConfigError("toy dataset: transition matrix must be vocab x vocab");
    for (std::size_t i = 0; i < vocab; ++i) {
      double sum = 0.0;
      for (double v : P.row(i)) {
        if (!(v >= 0.0)) throw ConfigError("toy dataset: negative transition probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("toy dataset: transition row " + std::to_string(i) +
                          " does not sum to 1");
    }
  }

  std::vector<int> tokens(n * length);
  for (std::size_t r = 0; r < n; ++r) {
    CounterRng rng(spec.seed, r, 0, StreamTag::Data);
    int* row = tokens.data() + r * length;
    switch (spec.kind) {
      case ToyKind::ConstantToken:
        std::fill(row, row + length, spec.token);
        break;
      case ToyKind::AlternatingPair: {
        const int first = static_cast<int>(rng.below(2));
        for (std::size_t l = 0; l < length; ++l) row[l] = (first + static_cast<int>(l)) % 2;
        break;
      }
      case ToyKind::MarkovChain: {
        int cur = static_cast<int>(rng.below(vocab));
        row[0] = cur;
        for (std::size_t l = 1; l < length; ++l) {
          const auto p = spec.transition.row(static_cast<std::size_t>(cur));
          double u = rng.uniform();
          int next = static_cast<int>(vocab) - 1;
          for (std::size_t j = 0; j < vocab; ++j) {
            if (u < p[j]) {
              next = static_cast<int>(j);
              break;
            }
            u -= p[j];
          }
          row[l] = cur = next;
        }
        break;
      }
    }
  }
  return SequenceBatch(n, length, vocab, std::move(tokens));
}

void write_dataset(const std::string& path, const SequenceBatch& batch) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write dataset " + path);
  os << "# vocab=" << batch.vocab << " L=" << batch.length << '\n';
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t l = 0; l < batch.length; ++l) os << (l ? " " : "") << batch.at(b, l);
    os << '\n';
  }
}

SequenceBatch read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open dataset " + path);
  std::string line;
  std::size_t vocab = 0, length = 0;
  if (!std::getline(is, line) ||
      std::sscanf(line.c_str(), "# vocab=%zu L=%zu", &vocab, &length) != 2)
    throw ConfigError(path + ":1: expected header '# vocab=<d> L=<L>'");
  std::vector<int> tokens;
  std::size_t rows = 0, lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::size_t count = 0;
    long tok;
    while (ls >> tok) {
      if (tok < 0 || static_cast<std::size_t>(tok) >= vocab)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": token outside vocabulary");
      tokens.push_back(static_cast<int>(tok));
      ++count;
    }
    if (!ls.eof() || count != length)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(length) + " integer tokens");
    ++rows;
  }
  return SequenceBatch(rows, length, vocab, std::move(tokens));
}

}  // namespace mdm
