// mdm: experiment runner (train, sample, benchmark, verify).

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "mdm/baselines.hpp"
#include "mdm/config.hpp"
#include "mdm/errors.hpp"
#include "mdm/metrics.hpp"
#include "mdm/random.hpp"
#include "mdm/score.hpp"
#include "mdm/sde.hpp"
#include "mdm/train.hpp"
#include "mdm/verify.hpp"

namespace fs = std::filesystem;
using namespace mdm;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kNonFiniteLoss = 3, kCheckpoint = 4 };

// ---------------------------------------------------------------------------
// Logging, controlled by MDM_LOG = error | warn | info | debug.

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("MDM_LOG");
    const std::string v = env ? env : "warn";
    if (v == "error" || v == "0") return 0;
    if (v == "info" || v == "2") return 2;
    if (v == "debug" || v == "3") return 3;
    return 1;
  }();
  return level;
}

void log(int level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) std::cerr << "[mdm " << names[level] << "] " << msg << '\n';
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// ---------------------------------------------------------------------------

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

struct Run {
  std::string command;
  ExperimentConfig cfg;
  KeyValueConfig resolved;
  fs::path dir;
  std::string started;
  std::vector<std::string> artifacts;

  fs::path file(const std::string& name) {
    artifacts.push_back(name);
    return dir / name;
  }
};

Run open_run(const std::string& command, const std::string& config_path, const Overrides& o) {
  KeyValueConfig kv = KeyValueConfig::load(config_path);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  if (o.out_dir) kv.set("output.dir", *o.out_dir);
  if (o.threads) kv.set("threads", std::to_string(*o.threads));
  Run run{command, ExperimentConfig::from_kv(kv), {}, {}, utc_now(), {}};
  run.resolved = run.cfg.to_kv();
  run.dir = run.cfg.output_dir;
  fs::create_directories(run.dir);
  log(2, command + ": config " + config_path + " hash " + run.resolved.hash() + " -> " +
             run.dir.string());
  return run;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << text;
}

void finish_run(Run& run) {
  write_text(run.file("config.txt"), run.resolved.canonical());
  nlohmann::json m;
  m["tool"] = "mdm";
  m["library_version"] = kVersion;
  m["command"] = run.command;
  m["config_hash"] = run.resolved.hash();
  m["config"] = run.resolved.canonical();
  m["seed"] = run.cfg.seed;
  m["threads"] = run.cfg.threads;
  m["started_at"] = run.started;
  m["finished_at"] = utc_now();
  run.artifacts.push_back("manifest.json");
  m["artifacts"] = run.artifacts;
  write_text(run.dir / "manifest.json", m.dump(2) + "\n");
}

std::string samples_csv(const Matrix& samples) {
  std::string out = "chain_id";
  for (std::size_t j = 0; j < samples.cols; ++j) out += ",coord_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < samples.rows; ++i) {
    out += std::to_string(i);
    for (double v : samples.row(i)) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling shared by `sample` and `benchmark`.

struct SampleOutcome {
  Matrix primal;
  std::size_t clamp_events = 0;
};

std::unique_ptr<ScoreModel> make_score(const ExperimentConfig& cfg, SampleMode mode,
                                       const TargetDistribution& target) {
  const MirrorMap mm = cfg.mirror_map();
  if (!cfg.checkpoint.empty()) {
    Mlp model = load_checkpoint(cfg.checkpoint);
    const MlpArch& a = model.arch();
    if (a.input_dim != cfg.dim)
      throw CheckpointError("checkpoint input_dim " + std::to_string(a.input_dim) +
                            " does not match domain.dim " + std::to_string(cfg.dim));
    if (a.steps != cfg.steps)
      throw CheckpointError("checkpoint T " + std::to_string(a.steps) +
                            " does not match schedule.T " + std::to_string(cfg.steps));
    return std::make_unique<MlpScore>(std::move(model), cfg.schedule());
  }
  if (!target.is_analytic())
    throw ConfigError("no model.checkpoint given and the target is not analytic");
  if (mode == SampleMode::MirrorCorrected)
    return std::make_unique<AnalyticPushforwardScore>(mm, target);
  return std::make_unique<AnalyticPushforwardScore>(mm, target, cfg.schedule());
}

SampleOutcome draw(const ExperimentConfig& cfg, SampleMode mode, const TargetDistribution& target,
                   std::uint64_t seed) {
  const MirrorMap mm = cfg.mirror_map();
  SampleOutcome out;
  switch (mode) {
    case SampleMode::DualDdpm:
    case SampleMode::MirrorCorrected: {
      if (mode == SampleMode::MirrorCorrected && !target.is_analytic())
        throw UnsupportedError("mirror-corrected sampling: analytic target required");
      const auto score = make_score(cfg, mode, target);
      ReverseRunOptions o;
      o.seed = seed;
      o.n_chains = cfg.n_chains;
      o.threads = cfg.threads;
      const ReverseRunResult r =
          run_reverse_sampler(mode == SampleMode::DualDdpm ? ReverseMode::DualDdpm
                                                           : ReverseMode::MirrorCorrected,
                              cfg.schedule(), mm, *score, &target, o);
      out.primal = r.primal;
      out.clamp_events = r.clamp_events;
      break;
    }
    case SampleMode::Mla:
    case SampleMode::Ula:
    case SampleMode::Pla: {
      const LangevinKind kind = mode == SampleMode::Mla   ? LangevinKind::Mla
                                : mode == SampleMode::Ula ? LangevinKind::Ula
                                                          : LangevinKind::Pla;
      LangevinRunOptions o;
      o.threads = cfg.threads;
      const LangevinRunResult r = run_langevin(
          kind, mm, target, LangevinConfig{cfg.step_size, cfg.n_steps, cfg.n_chains, seed}, o);
      out.primal = r.final_state;
      break;
    }
    case SampleMode::Cir: {
      if (target.kind() != TargetKind::Dirichlet)
        throw UnsupportedError("cir sampling needs a dirichlet target");
      out.primal = dirichlet_from_cir(cfg.cir_params(), cfg.n_chains, seed, cfg.threads).samples;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path, const Overrides& o) {
  Run run = open_run("train", config_path, o);
  const ExperimentConfig& cfg = run.cfg;
  const TargetDistribution data = cfg.target();
  const MirrorMap mm = cfg.mirror_map();
  log(2, "training " + std::to_string(cfg.training.iterations) + " iterations");
  const TrainingResult res = train_dsm(mm, data, cfg.schedule(), cfg.arch(), cfg.training);
  save_checkpoint(run.file("checkpoint.mdm").string(), res.model);
  std::string loss = "iteration,loss\n";
  for (const auto& [it, l] : res.loss_curve) loss += std::to_string(it) + "," + format_double(l) + "\n";
  write_text(run.file("loss.csv"), loss);
  finish_run(run);
  return kOk;
}

int cmd_sample(const std::string& config_path, const Overrides& o) {
  Run run = open_run("sample", config_path, o);
  const ExperimentConfig& cfg = run.cfg;
  const TargetDistribution target = cfg.target();
  const SampleOutcome s = draw(cfg, cfg.mode, target, cfg.seed);
  write_text(run.file("samples.csv"), samples_csv(s.primal));

  MetricReport report;
  const std::size_t bad = violation_count(cfg.domain(), s.primal);
  report.add("violation_count", static_cast<double>(bad), 0.0, bad == 0);
  report.add("clamp_events", static_cast<double>(s.clamp_events), std::nullopt, true);
  if (s.primal.rows >= 2) {
    const Moments m = empirical_moments(s.primal);
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      report.add("mean_coord_" + std::to_string(j), m.mean[j], std::nullopt, true);
      report.add("variance_coord_" + std::to_string(j), m.variance[j], std::nullopt, true);
    }
  }
  write_text(run.file("metrics.csv"), report.to_csv());
  finish_run(run);
  log(2, "sampled " + std::to_string(s.primal.rows) + " chains, " + std::to_string(bad) +
             " violations");
  return kOk;
}

int cmd_benchmark(const std::string& config_path, const Overrides& o) {
  Run run = open_run("benchmark", config_path, o);
  const ExperimentConfig& cfg = run.cfg;
  const TargetDistribution target = cfg.target();
  if (!target.is_analytic()) throw UnsupportedError("benchmark: analytic target required");

  auto oracle_draw = [&](std::uint64_t stream) {
    Matrix m(cfg.oracle_samples, cfg.dim);
    for (std::size_t i = 0; i < m.rows; ++i) {
      CounterRng rng(cfg.seed, i, stream, StreamTag::Oracle);
      const Vec x = target.sample(rng);
      std::copy(x.begin(), x.end(), m.row(i).begin());
    }
    return m;
  };
  const Matrix oracle = oracle_draw(0);

  std::string csv = "sampler,w1_to_oracle,violation_count,wall_clock_s,status\n";
  for (const std::string& name : cfg.benchmark_samplers) {
    const auto t0 = std::chrono::steady_clock::now();
    Matrix samples;
    std::string status = "ok";
    try {
      samples = name == "oracle" ? oracle_draw(1)
                                 : draw(cfg, parse_sample_mode(name), target, cfg.seed).primal;
    } catch (const UnsupportedError& e) {
      status = std::string("unsupported: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double w1 = std::nan("");
    std::size_t bad = 0;
    if (samples.rows > 0) {
      w1 = 0.0;
      for (std::size_t j = 0; j < cfg.dim; ++j)
        w1 += wasserstein1_1d(samples.column(j), oracle.column(j));
      w1 /= static_cast<double>(cfg.dim);
      bad = violation_count(cfg.domain(), samples);
    }
    for (char& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    csv += name + "," + format_double(w1) + "," + std::to_string(bad) + "," +
           format_double(secs) + "," + status + "\n";
    log(2, "benchmark " + name + ": W1 " + format_double(w1) + ", " + status);
  }
  write_text(run.file("benchmark.csv"), csv);
  finish_run(run);
  return kOk;
}

int cmd_verify(const std::optional<std::string>& out_dir, double hessian_fault) {
  VerifyOptions opts;
  opts.hessian_fault = hessian_fault;
  const MetricReport report = run_verify_suite(opts);
  std::printf("%-36s %-24s %-12s %s\n", "check", "value", "tolerance", "result");
  for (const auto& r : report.rows())
    std::printf("%-36s %-24s %-12s %s\n", r.name.c_str(), format_double(r.value).c_str(),
                r.tolerance ? format_double(*r.tolerance).c_str() : "",
                r.pass ? "PASS" : "FAIL");
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_text(fs::path(*out_dir) / "verify.csv", report.to_csv());
  }
  return report.all_pass() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mirror diffusion sampling toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 1;
  double hessian_fault = 1.0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out-dir", out_dir, "override output.dir");
    sub->add_option("--threads", threads, "override threads")->check(CLI::PositiveNumber);
  };
  CLI::App* train = app.add_subcommand("train", "fit a score network by denoising score matching");
  CLI::App* sample = app.add_subcommand("sample", "draw samples and write CSVs");
  CLI::App* bench = app.add_subcommand("benchmark", "compare samplers against an oracle");
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  for (CLI::App* s : {train, sample, bench}) add_common(s, true);
  verify->add_option("--out-dir", out_dir, "write verify.csv here");
  verify->add_option("--hessian-fault", hessian_fault)->group("");

  CLI11_PARSE(app, argc, argv);

  auto overrides = [&](CLI::App* sub) {
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--out-dir")) ov.out_dir = out_dir;
    if (sub->count("--threads")) ov.threads = threads;
    return ov;
  };

  try {
    if (*train) return cmd_train(config_path, overrides(train));
    if (*sample) return cmd_sample(config_path, overrides(sample));
    if (*bench) return cmd_benchmark(config_path, overrides(bench));
    if (*verify)
      return cmd_verify(verify->count("--out-dir") ? std::optional<std::string>(out_dir)
                                                   : std::nullopt,
                        hessian_fault);
  } catch (const NonFiniteLossError& e) {
    log(0, e.what());
    return kNonFiniteLoss;
  } catch (const CheckpointError& e) {
    log(0, e.what());
    return kCheckpoint;
  } catch (const Error& e) {
    log(0, e.what());
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    log(0, e.what());
    return kConfigError;
  }
  return kOk;
}
