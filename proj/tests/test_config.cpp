#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "mdm/config.hpp"
#include "mdm/errors.hpp"

using namespace mdm;

namespace {

const char* kBase = R"(# comment line
seed = 7
domain.kind = box
domain.dim = 2
mirror.kind = log_barrier
target.kind = product_beta
target.a = 2, 3
target.b = 2, 1.5   # trailing comment
schedule.T = 200
sample.mode = mirror-corrected
)";

std::string message_of(const std::string& text) {
  try {
    ExperimentConfig::from_kv(KeyValueConfig::parse(text, "run.cfg"));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("key-value parsing") {
  const auto kv = KeyValueConfig::parse(kBase, "run.cfg");
  CHECK(kv.entries().at("target.b").value == "2, 1.5");
  CHECK(kv.entries().at("seed").line == 2);
  CHECK(kv.where("seed") == "run.cfg:2");
  try {
    KeyValueConfig::parse("a = 1\nbroken line\n", "x.cfg");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("x.cfg:2:", 0) == 0);
  }
  try {
    KeyValueConfig::parse("a = 1\n\na = 2\n", "x.cfg");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x.cfg:3:") != std::string::npos);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/cfg"), ConfigError);
}

TEST_CASE("hash is independent of key order") {
  const auto a = KeyValueConfig::parse("x = 1\ny = two\nz.w = 3\n");
  const auto b = KeyValueConfig::parse("z.w = 3\n# c\nx = 1\n\ny = two\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  const auto c = KeyValueConfig::parse("x = 1\ny = three\nz.w = 3\n");
  CHECK(a.hash() != c.hash());
}

TEST_CASE("typed config round trip") {
  const auto cfg = ExperimentConfig::from_kv(KeyValueConfig::parse(kBase, "run.cfg"));
  CHECK(cfg.seed == 7);
  CHECK(cfg.beta_a == Vec{2, 3});
  CHECK(cfg.mode == SampleMode::MirrorCorrected);
  CHECK(cfg.steps == 200);
  const KeyValueConfig kv = cfg.to_kv();
  const auto again = ExperimentConfig::from_kv(KeyValueConfig::parse(kv.canonical()));
  CHECK(again == cfg);
  CHECK(again.to_kv().hash() == kv.hash());

  const auto gm = ExperimentConfig::from_kv(KeyValueConfig::parse(
      "domain.kind = euclidean\ndomain.dim = 2\nmirror.kind = identity\n"
      "target.kind = gaussian_mixture\ntarget.weights = 0.25,0.75\n"
      "target.means = 0,1; -2,0.5\ntarget.stds = 1,0.5\nmodel.hidden = 16\n"
      "model.activation = silu\nbenchmark.samplers = ula,mla\n"));
  CHECK(gm.means == std::vector<Vec>{{0, 1}, {-2, 0.5}});
  CHECK(ExperimentConfig::from_kv(KeyValueConfig::parse(gm.to_kv().canonical())) == gm);
  CHECK(gm.target().kind() == TargetKind::GaussianMixture);
}

TEST_CASE("config errors") {
  CHECK(message_of(std::string(kBase) + "bogus.key = 1\n").find("run.cfg:11") !=
        std::string::npos);
  CHECK(message_of(std::string(kBase) + "bogus.key = 1\n").find("unknown key") !=
        std::string::npos);
  CHECK(message_of("domain.kind = box\ndomain.dim = 1\nmirror.kind = log_barrier\n"
                   "target.kind = empirical\n")
            .find("data.path") != std::string::npos);
  CHECK(message_of("domain.kind = box\ndomain.dim = 1\nmirror.kind = log_barrier\n"
                   "target.kind = empirical\ndata.path = pts.txt\nsample.mode = mirror-corrected\n")
            .find("analytic target required") != std::string::npos);
  CHECK(message_of("domain.kind = simplex\ndomain.dim = 3\nmirror.kind = negative_entropy\n"
                   "target.kind = dirichlet\ntarget.alpha = 1,1,1\nsample.mode = cir\n"
                   "cir.sigma = 1\n")
            .find("cir.sigma") != std::string::npos);
  CHECK(message_of("domain.kind = box\ndomain.dim = 1\nmirror.kind = negative_entropy\n"
                   "target.kind = product_beta\ntarget.a = 2\ntarget.b = 2\n")
            .find("mirror.kind") != std::string::npos);
  CHECK(message_of(std::string(kBase) + "benchmark.samplers = mla,nope\n")
            .find("benchmark.samplers") != std::string::npos);
  CHECK(message_of(std::string(kBase) + "schedule.beta_max = abc\n")
            .find("schedule.beta_max") != std::string::npos);
  const auto no_target =
      ExperimentConfig::from_kv(KeyValueConfig::parse("domain.kind = box\ndomain.dim = 2\n"));
  CHECK_THROWS_WITH_AS(no_target.target(), doctest::Contains("target.kind"), ConfigError);
}

TEST_CASE("point files") {
  std::filesystem::create_directories(MDM_TEST_TMP);
  const std::string path = std::string(MDM_TEST_TMP) + "/pts.txt";
  std::ofstream(path) << "# header\n0.1, 0.2\n0.3 0.4\n\n";
  const Matrix m = read_points(path, 2);
  CHECK(m.rows == 2);
  CHECK(m.data == std::vector<double>{0.1, 0.2, 0.3, 0.4});
  std::ofstream(path, std::ios::trunc) << "0.1\n";
  CHECK_THROWS_AS(read_points(path, 2), ConfigError);
}
