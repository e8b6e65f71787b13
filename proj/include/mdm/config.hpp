#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdm/baselines.hpp"
#include "mdm/domain.hpp"
#include "mdm/mirror.hpp"
#include "mdm/mlp.hpp"
#include "mdm/schedule.hpp"
#include "mdm/target.hpp"
#include "mdm/train.hpp"

namespace mdm {

/// Flat "key = value" document. '#' starts a comment, blank lines are
/// ignored, keys are dotted section names such as "schedule.T".
class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  /// ConfigError "<source>:<line>: ..." on malformed lines and duplicate keys.
  static KeyValueConfig parse(const std::string& text, const std::string& source = "config");
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  /// Location prefix for messages about `key`, e.g. "run.cfg:12".
  std::string where(const std::string& key) const;

  /// Keys sorted, one "key = value" per line.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits; independent of key order.
  std::string hash() const;

 private:
  std::string source_ = "config";
  std::map<std::string, Entry> entries_;
};

enum class SampleMode { DualDdpm, MirrorCorrected, Mla, Ula, Pla, Cir };

std::string to_string(SampleMode m);
SampleMode parse_sample_mode(const std::string& s);

/// Every setting of an experiment, typed. Keys (defaults in brackets):
///   seed [0], threads [1], output.dir [out]
///   domain.kind euclidean|simplex|box, domain.dim, domain.lower [0], domain.upper [1]
///   mirror.kind identity|negative_entropy|log_barrier, mirror.interior_floor [1e-12]
///   schedule.beta_min [0.1], schedule.beta_max [20], schedule.T [1000]
///   target.kind dirichlet|product_beta|gaussian_mixture|empirical,
///     target.alpha, target.a, target.b, target.weights, target.stds (comma lists),
///     target.means (';'-separated comma lists)
///   data.path: whitespace- or comma-separated points, one per line (empirical)
///   model.hidden [32,32], model.time_embedding [8], model.activation tanh|silu,
///     model.checkpoint (sampling from a trained model)
///   train.learning_rate [1e-3], train.batch_size [128], train.iterations [20000],
///     train.log_every [100]
///   sample.mode, sample.n_chains [1000], sample.n_steps [1000], sample.step_size [1e-3]
///   cir.beta [1], cir.sigma [sqrt 2], cir.dt [1e-3], cir.n_steps [10000]
///   benchmark.samplers [mla,pla,dual-ddpm,mirror-corrected,cir],
///     benchmark.oracle_samples [100000]
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";

  DomainKind domain_kind = DomainKind::Euclidean;
  std::size_t dim = 1;
  double lower = 0.0;
  double upper = 1.0;

  MirrorKind mirror_kind = MirrorKind::Identity;
  double interior_floor = MirrorMap::kDefaultFloor;

  double beta_min = NoiseSchedule::kDefaultBetaMin;
  double beta_max = NoiseSchedule::kDefaultBetaMax;
  int steps = NoiseSchedule::kDefaultSteps;

  std::optional<TargetKind> target_kind;
  Vec alpha, beta_a, beta_b, weights, stds;
  std::vector<Vec> means;
  std::string data_path;

  std::vector<std::size_t> hidden{32, 32};
  std::size_t time_embedding = 8;
  Activation activation = Activation::Tanh;
  std::string checkpoint;

  TrainingConfig training;

  SampleMode mode = SampleMode::DualDdpm;
  std::size_t n_chains = 1000;
  long n_steps = 1000;
  double step_size = 1e-3;

  double cir_beta = 1.0;
  double cir_sigma = 1.4142135623730951;
  double cir_dt = 1e-3;
  long cir_steps = 10000;

  std::vector<std::string> benchmark_samplers{"mla", "pla", "dual-ddpm", "mirror-corrected",
                                              "cir"};
  std::size_t oracle_samples = 100000;

  /// ConfigError (line-anchored where possible) on unknown keys, bad values
  /// and inconsistent settings.
  static ExperimentConfig from_kv(const KeyValueConfig& kv);
  /// Every field written out; from_kv(to_kv()) reproduces the config.
  KeyValueConfig to_kv() const;
  bool operator==(const ExperimentConfig&) const = default;

  DomainSpec domain() const;
  MirrorMap mirror_map() const;
  NoiseSchedule schedule() const;
  MlpArch arch() const;
  CirParams cir_params() const;
  /// Builds the target; an empirical target reads data.path.
  TargetDistribution target() const;
};

/// Reads a point file: one sample per line, comma or whitespace separated.
Matrix read_points(const std::string& path, std::size_t dim);

}  // namespace mdm
