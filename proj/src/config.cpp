#include "mdm/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mdm/errors.hpp"
#include "mdm/metrics.hpp"

namespace mdm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
  KeyValueConfig kv;
  kv.source_ = source;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string at = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(at + "empty key");
    if (kv.entries_.count(key))
      throw ConfigError(at + "duplicate key '" + key + "' (first set on line " +
                        std::to_string(kv.entries_[key].line) + ")");
    kv.entries_[key] = {value, lineno};
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

std::string KeyValueConfig::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return source_;
  return source_ + ":" + std::to_string(it->second.line);
}

std::string KeyValueConfig::canonical() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + " = " + e.value + "\n";
  return out;
}

std::string KeyValueConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string to_string(SampleMode m) {
  switch (m) {
    case SampleMode::DualDdpm:
      return "dual-ddpm";
    case SampleMode::MirrorCorrected:
      return "mirror-corrected";
    case SampleMode::Mla:
      return "mla";
    case SampleMode::Ula:
      return "ula";
    case SampleMode::Pla:
      return "pla";
    case SampleMode::Cir:
      return "cir";
  }
  return "?";
}

SampleMode parse_sample_mode(const std::string& s) {
  for (SampleMode m : {SampleMode::DualDdpm, SampleMode::MirrorCorrected, SampleMode::Mla,
                       SampleMode::Ula, SampleMode::Pla, SampleMode::Cir})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown sampler '" + s +
                    "' (expected dual-ddpm, mirror-corrected, mla, ula, pla or cir)");
}

namespace {

/// Typed, line-anchored access to a parsed document.
class Reader {
 public:
  explicit Reader(const KeyValueConfig& kv) : kv_(kv) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return kv_.has(key);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(kv_.where(key) + ": " + key + ": " + msg);
  }
  const std::string& str(const std::string& key) {
    used_.insert(key);
    return kv_.entries().at(key).value;
  }

  double real(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return to_real(key, str(key));
  }
  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const std::string& s = str(key);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback, long min = 1) {
    const long v = integer(key, static_cast<long>(fallback));
    if (v < min) fail(key, "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? str(key) : fallback;
  }
  Vec list(const std::string& key) {
    if (!has(key)) return {};
    Vec out;
    for (const auto& part : split(str(key), ',')) out.push_back(to_real(key, part));
    return out;
  }
  std::vector<Vec> list_of_lists(const std::string& key) {
    if (!has(key)) return {};
    std::vector<Vec> out;
    for (const auto& group : split(str(key), ';')) {
      Vec v;
      for (const auto& part : split(group, ',')) v.push_back(to_real(key, part));
      out.push_back(std::move(v));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, e] : kv_.entries())
      if (!used_.count(k)) fail(k, "unknown key");
  }

 private:
  double to_real(const std::string& key, const std::string& s) const {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v))
      fail(key, "expected a finite number, got '" + s + "'");
    return v;
  }

  const KeyValueConfig& kv_;
  std::set<std::string> used_;
};

std::string join(const Vec& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
  Reader r(kv);
  ExperimentConfig c;
  c.seed = static_cast<std::uint64_t>(r.count("seed", 0, 0));
  c.threads = static_cast<int>(r.count("threads", 1));
  c.output_dir = r.text("output.dir", c.output_dir);

  const std::string dk = r.text("domain.kind", "euclidean");
  if (dk == "euclidean")
    c.domain_kind = DomainKind::Euclidean;
  else if (dk == "simplex")
    c.domain_kind = DomainKind::Simplex;
  else if (dk == "box")
    c.domain_kind = DomainKind::Box;
  else
    r.fail("domain.kind", "expected euclidean, simplex or box, got '" + dk + "'");
  c.dim = r.count("domain.dim", 1);
  c.lower = r.real("domain.lower", 0.0);
  c.upper = r.real("domain.upper", 1.0);
  if (c.domain_kind == DomainKind::Box && !(c.lower < c.upper))
    r.fail("domain.upper", "must exceed domain.lower");
  if (c.domain_kind == DomainKind::Simplex && c.dim < 2)
    r.fail("domain.dim", "a simplex needs at least 2 coordinates");

  const MirrorKind natural = c.domain_kind == DomainKind::Simplex ? MirrorKind::NegativeEntropy
                             : c.domain_kind == DomainKind::Box   ? MirrorKind::LogBarrier
                                                                  : MirrorKind::Identity;
  const std::string mk = r.text("mirror.kind", to_string(natural));
  if (mk != to_string(natural))
    r.fail("mirror.kind", "'" + mk + "' does not match domain '" + dk + "' (use " +
                              to_string(natural) + ")");
  c.mirror_kind = natural;
  c.interior_floor = r.real("mirror.interior_floor", c.interior_floor);
  if (!(c.interior_floor > 0.0)) r.fail("mirror.interior_floor", "must be positive");

  c.beta_min = r.real("schedule.beta_min", c.beta_min);
  c.beta_max = r.real("schedule.beta_max", c.beta_max);
  c.steps = static_cast<int>(r.count("schedule.T", static_cast<std::size_t>(c.steps)));
  try {
    (void)c.schedule();
  } catch (const ConfigError& e) {
    r.fail("schedule.T", e.what());
  }

  if (r.has("target.kind")) {
    const std::string tk = r.str("target.kind");
    for (TargetKind k : {TargetKind::Dirichlet, TargetKind::ProductBeta,
                         TargetKind::GaussianMixture, TargetKind::Empirical})
      if (to_string(k) == tk) c.target_kind = k;
    if (!c.target_kind)
      r.fail("target.kind",
             "expected dirichlet, product_beta, gaussian_mixture or empirical, got '" + tk + "'");
  }
  c.alpha = r.list("target.alpha");
  c.beta_a = r.list("target.a");
  c.beta_b = r.list("target.b");
  c.weights = r.list("target.weights");
  c.stds = r.list("target.stds");
  c.means = r.list_of_lists("target.means");
  c.data_path = r.text("data.path", "");
  if (c.target_kind) {
    switch (*c.target_kind) {
      case TargetKind::Dirichlet:
        if (c.domain_kind != DomainKind::Simplex)
          r.fail("target.kind", "dirichlet needs domain.kind = simplex");
        if (c.alpha.size() != c.dim) r.fail("target.alpha", "needs domain.dim entries");
        break;
      case TargetKind::ProductBeta:
        if (c.domain_kind != DomainKind::Box)
          r.fail("target.kind", "product_beta needs domain.kind = box");
        if (c.beta_a.size() != c.dim) r.fail("target.a", "needs domain.dim entries");
        if (c.beta_b.size() != c.dim) r.fail("target.b", "needs domain.dim entries");
        break;
      case TargetKind::GaussianMixture:
        if (c.domain_kind != DomainKind::Euclidean)
          r.fail("target.kind", "gaussian_mixture needs domain.kind = euclidean");
        if (c.weights.empty()) r.fail("target.weights", "at least one component required");
        if (c.means.size() != c.weights.size() || c.stds.size() != c.weights.size())
          r.fail("target.means", "weights, means and stds need one entry per component");
        for (const Vec& m : c.means)
          if (m.size() != c.dim) r.fail("target.means", "every mean needs domain.dim entries");
        break;
      case TargetKind::Empirical:
        if (c.data_path.empty())
          r.fail("target.kind", "missing required key 'data.path' for an empirical target");
        break;
    }
  }

  if (r.has("model.hidden")) {
    c.hidden.clear();
    for (double w : r.list("model.hidden")) {
      if (!(w >= 1.0) || w != std::floor(w)) r.fail("model.hidden", "widths must be positive integers");
      c.hidden.push_back(static_cast<std::size_t>(w));
    }
  }
  c.time_embedding = r.count("model.time_embedding", c.time_embedding, 0);
  const std::string act = r.text("model.activation", to_string(c.activation));
  if (act == "tanh")
    c.activation = Activation::Tanh;
  else if (act == "silu")
    c.activation = Activation::SiLU;
  else
    r.fail("model.activation", "expected tanh or silu, got '" + act + "'");
  c.checkpoint = r.text("model.checkpoint", "");

  c.training.learning_rate = r.real("train.learning_rate", c.training.learning_rate);
  if (c.training.learning_rate < 0.0) r.fail("train.learning_rate", "must be non-negative");
  c.training.batch_size = r.count("train.batch_size", c.training.batch_size);
  c.training.iterations = static_cast<long>(
      r.count("train.iterations", static_cast<std::size_t>(c.training.iterations)));
  c.training.log_every = static_cast<long>(
      r.count("train.log_every", static_cast<std::size_t>(c.training.log_every)));
  c.training.adam_beta1 = r.real("train.adam_beta1", c.training.adam_beta1);
  c.training.adam_beta2 = r.real("train.adam_beta2", c.training.adam_beta2);
  c.training.adam_eps = r.real("train.adam_eps", c.training.adam_eps);
  c.training.seed = c.seed;

  if (r.has("sample.mode")) {
    try {
      c.mode = parse_sample_mode(r.str("sample.mode"));
    } catch (const ConfigError& e) {
      r.fail("sample.mode", e.what());
    }
  }
  c.n_chains = r.count("sample.n_chains", c.n_chains);
  c.n_steps = static_cast<long>(r.count("sample.n_steps", static_cast<std::size_t>(c.n_steps)));
  c.step_size = r.real("sample.step_size", c.step_size);
  if (!(c.step_size > 0.0)) r.fail("sample.step_size", "must be positive");

  c.cir_beta = r.real("cir.beta", c.cir_beta);
  c.cir_sigma = r.real("cir.sigma", c.cir_sigma);
  c.cir_dt = r.real("cir.dt", c.cir_dt);
  c.cir_steps = static_cast<long>(r.count("cir.n_steps", static_cast<std::size_t>(c.cir_steps)));

  if (r.has("benchmark.samplers")) {
    c.benchmark_samplers = split(r.str("benchmark.samplers"), ',');
    for (const auto& s : c.benchmark_samplers) {
      if (s == "oracle") continue;
      try {
        (void)parse_sample_mode(s);
      } catch (const ConfigError& e) {
        r.fail("benchmark.samplers", e.what());
      }
    }
  }
  c.oracle_samples = r.count("benchmark.oracle_samples", c.oracle_samples, 2);

  r.reject_unknown();

  if (r.has("sample.mode")) {
    if (c.mode == SampleMode::MirrorCorrected && c.target_kind == TargetKind::Empirical)
      r.fail("sample.mode", "mirror-corrected sampling: analytic target required");
    if (c.mode == SampleMode::Cir) {
      if (c.target_kind != TargetKind::Dirichlet)
        r.fail("sample.mode", "cir sampling needs a dirichlet target");
      try {
        c.cir_params().validate();
      } catch (const ConfigError& e) {
        r.fail("cir.sigma", e.what());
      }
    }
  }
  return c;
}

KeyValueConfig ExperimentConfig::to_kv() const {
  KeyValueConfig kv;
  auto real = [&](const std::string& k, double v) { kv.set(k, format_double(v)); };
  auto integer = [&](const std::string& k, long long v) { kv.set(k, std::to_string(v)); };
  integer("seed", static_cast<long long>(seed));
  integer("threads", threads);
  kv.set("output.dir", output_dir);
  kv.set("domain.kind", domain_kind == DomainKind::Simplex ? "simplex"
                        : domain_kind == DomainKind::Box   ? "box"
                                                           : "euclidean");
  integer("domain.dim", static_cast<long long>(dim));
  real("domain.lower", lower);
  real("domain.upper", upper);
  kv.set("mirror.kind", to_string(mirror_kind));
  real("mirror.interior_floor", interior_floor);
  real("schedule.beta_min", beta_min);
  real("schedule.beta_max", beta_max);
  integer("schedule.T", steps);
  if (target_kind) kv.set("target.kind", to_string(*target_kind));
  if (!alpha.empty()) kv.set("target.alpha", join(alpha));
  if (!beta_a.empty()) kv.set("target.a", join(beta_a));
  if (!beta_b.empty()) kv.set("target.b", join(beta_b));
  if (!weights.empty()) kv.set("target.weights", join(weights));
  if (!stds.empty()) kv.set("target.stds", join(stds));
  if (!means.empty()) {
    std::string m;
    for (std::size_t i = 0; i < means.size(); ++i) m += (i ? ";" : "") + join(means[i]);
    kv.set("target.means", m);
  }
  if (!data_path.empty()) kv.set("data.path", data_path);
  {
    std::string h;
    for (std::size_t i = 0; i < hidden.size(); ++i) h += (i ? "," : "") + std::to_string(hidden[i]);
    if (!h.empty()) kv.set("model.hidden", h);
  }
  integer("model.time_embedding", static_cast<long long>(time_embedding));
  kv.set("model.activation", to_string(activation));
  if (!checkpoint.empty()) kv.set("model.checkpoint", checkpoint);
  real("train.learning_rate", training.learning_rate);
  integer("train.batch_size", static_cast<long long>(training.batch_size));
  integer("train.iterations", training.iterations);
  integer("train.log_every", training.log_every);
  real("train.adam_beta1", training.adam_beta1);
  real("train.adam_beta2", training.adam_beta2);
  real("train.adam_eps", training.adam_eps);
  kv.set("sample.mode", to_string(mode));
  integer("sample.n_chains", static_cast<long long>(n_chains));
  integer("sample.n_steps", n_steps);
  real("sample.step_size", step_size);
  real("cir.beta", cir_beta);
  real("cir.sigma", cir_sigma);
  real("cir.dt", cir_dt);
  integer("cir.n_steps", cir_steps);
  {
    std::string s;
    for (std::size_t i = 0; i < benchmark_samplers.size(); ++i)
      s += (i ? "," : "") + benchmark_samplers[i];
    kv.set("benchmark.samplers", s);
  }
  integer("benchmark.oracle_samples", static_cast<long long>(oracle_samples));
  return kv;
}

DomainSpec ExperimentConfig::domain() const {
  switch (domain_kind) {
    case DomainKind::Simplex:
      return DomainSpec::simplex(dim);
    case DomainKind::Box:
      return DomainSpec::box(dim, lower, upper);
    case DomainKind::Euclidean:
      break;
  }
  return DomainSpec::euclidean(dim);
}

MirrorMap ExperimentConfig::mirror_map() const {
  return MirrorMap(domain(), mirror_kind, interior_floor);
}

NoiseSchedule ExperimentConfig::schedule() const {
  return NoiseSchedule::linear(beta_min, beta_max, steps);
}

MlpArch ExperimentConfig::arch() const {
  MlpArch a;
  a.input_dim = dim;
  a.hidden_widths = hidden;
  a.time_embedding_dim = time_embedding;
  a.activation = activation;
  a.steps = steps;
  return a;
}

CirParams ExperimentConfig::cir_params() const {
  CirParams p;
  p.alpha = alpha;
  p.beta = cir_beta;
  p.sigma = cir_sigma;
  p.dt = cir_dt;
  p.n_steps = cir_steps;
  p.require_dirichlet = true;
  p.floor = interior_floor;
  return p;
}

TargetDistribution ExperimentConfig::target() const {
  if (!target_kind) throw ConfigError("missing required key 'target.kind'");
  switch (*target_kind) {
    case TargetKind::Dirichlet:
      return TargetDistribution::dirichlet(alpha);
    case TargetKind::ProductBeta:
      return TargetDistribution::product_beta(beta_a, beta_b, lower, upper);
    case TargetKind::GaussianMixture:
      return TargetDistribution::gaussian_mixture(weights, means, stds);
    case TargetKind::Empirical:
      if (data_path.empty()) throw ConfigError("missing required key 'data.path'");
      return TargetDistribution::empirical(domain(), read_points(data_path, dim));
  }
  throw ConfigError("unknown target kind");
}

Matrix read_points(const std::string& path, std::size_t dim) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open data file " + path + " (data.path)");
  Matrix m(0, dim);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::size_t count = 0;
    double v;
    while (ls >> v) {
      m.data.push_back(v);
      ++count;
    }
    if (!ls.eof() || count != dim)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " numbers");
    ++m.rows;
  }
  if (m.rows == 0) throw ConfigError(path + ": no data points");
  return m;
}

}  // namespace mdm
