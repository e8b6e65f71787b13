#include "mdm/train.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "mdm/errors.hpp"
#include "mdm/random.hpp"
#include "mdm/sde.hpp"

namespace mdm {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void TrainingConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate must be finite and non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (iterations < 1) throw ConfigError("train.iterations must be at least 1");
  if (log_every < 1) throw ConfigError("train.log_every must be at least 1");
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

namespace {

using DrawFn = std::function<Vec(CounterRng&)>;

TrainingResult train_loop(const DrawFn& draw_y0, std::size_t dim, const NoiseSchedule& sched,
                          const MlpArch& arch, const TrainingConfig& cfg) {
  cfg.validate();
  if (arch.input_dim != dim)
    throw ShapeError("model input_dim does not match the data dimension");
  if (arch.steps != sched.steps())
    throw ConfigError("model T must equal schedule.T");

  TrainingResult result{Mlp::initialized(arch, cfg.seed), {}};
  Mlp& model = result.model;
  Adam adam(model.params().size(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
            cfg.adam_eps);

  const std::size_t B = cfg.batch_size;
  Matrix y(B, dim), noise(B, dim);
  std::vector<int> ks(B);
  double window = 0.0;

  for (long it = 0; it < cfg.iterations; ++it) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(it), 0, StreamTag::Training);
    for (std::size_t b = 0; b < B; ++b) {
      const Vec y0 = draw_y0(rng);
      const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
      auto z = noise.row(b);
      rng.fill_normal(z);
      const Vec yk = forward_marginal(sched, y0, k, z);
      std::copy(yk.begin(), yk.end(), y.row(b).begin());
      ks[b] = k;
    }
    const MlpGradient g = model.loss_and_grad(y, ks, noise);
    if (!std::isfinite(g.loss))
      throw NonFiniteLossError("training loss became non-finite at iteration " +
                                   std::to_string(it + 1),
                               it + 1);
    adam.step(model.params(), g.params);
    window += g.loss;
    if ((it + 1) % cfg.log_every == 0) {
      result.loss_curve.emplace_back(it + 1, window / static_cast<double>(cfg.log_every));
      window = 0.0;
    }
  }
  return result;
}

}  // namespace

TrainingResult train_dsm(const MirrorMap& mm, const TargetDistribution& data,
                         const NoiseSchedule& sched, const MlpArch& arch,
                         const TrainingConfig& cfg) {
  if (!(mm.domain() == data.domain()))
    throw ConfigError("training data domain does not match the mirror map domain");
  return train_loop(
      [&](CounterRng& rng) {
        const Vec x0 = mm.clamp_to_interior(data.sample(rng));
        return mm.grad(x0);
      },
      mm.dim(), sched, arch, cfg);
}

TrainingResult train_dsm_dual(const Matrix& dual_data, const NoiseSchedule& sched,
                              const MlpArch& arch, const TrainingConfig& cfg) {
  if (dual_data.rows == 0) throw ConfigError("training data is empty");
  return train_loop(
      [&](CounterRng& rng) {
        const auto row = dual_data.row(rng.below(dual_data.rows));
        return Vec(row.begin(), row.end());
      },
      dual_data.cols, sched, arch, cfg);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'D', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw CheckpointError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Mlp& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write checkpoint " + path);
  const MlpArch& a = model.arch();
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(a.input_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(a.time_embedding_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(a.activation));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(a.steps));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(a.hidden_widths.size()));
  for (std::size_t w : a.hidden_widths) put<std::uint32_t>(os, static_cast<std::uint32_t>(w));
  put<std::uint64_t>(os, model.params().size());
  for (double p : model.params()) put<double>(os, p);
  if (!os) throw CheckpointError("failed writing checkpoint " + path);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError(path + ": not an MDM1 checkpoint");
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion)
    throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(version));
  MlpArch arch;
  arch.input_dim = get<std::uint32_t>(is, path);
  arch.time_embedding_dim = get<std::uint32_t>(is, path);
  const auto act = get<std::uint32_t>(is, path);
  if (act > 1) throw CheckpointError(path + ": unknown activation id");
  arch.activation = static_cast<Activation>(act);
  arch.steps = static_cast<int>(get<std::uint32_t>(is, path));
  const auto n_hidden = get<std::uint32_t>(is, path);
  if (n_hidden > 1024) throw CheckpointError(path + ": implausible layer count");
  arch.hidden_widths.resize(n_hidden);
  for (auto& w : arch.hidden_widths) w = get<std::uint32_t>(is, path);
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  const auto count = get<std::uint64_t>(is, path);
  if (count != arch.parameter_count())
    throw CheckpointError(path + ": parameter count does not match architecture");
  Mlp model(arch);
  for (double& p : model.params()) p = get<double>(is, path);
  return model;
}

}  // namespace mdm
