#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "sysrisk/sysrisk.h"

namespace fs = std::filesystem;

namespace {

const fs::path kSource = SYSRISK_SOURCE_DIR;
const std::string kTiny = (kSource / "tests/data/tiny.scenario").string();

fs::path scratch(const char* name) {
  const fs::path p = fs::temp_directory_path() / "sysrisk_capi" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string last_line(const fs::path& file) {
  std::ifstream in(file);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return last;
}

struct Scenario {
  sr_scenario* h = nullptr;
  explicit Scenario(const std::string& path) { REQUIRE(sr_scenario_load(path.c_str(), &h) == SR_OK); }
  ~Scenario() { sr_scenario_free(h); }
};

}  // namespace

TEST_CASE("version and exit codes") {
  CHECK(std::strlen(sr_version()) > 0);
  CHECK(sr_exit_code(SR_OK) == 0);
  CHECK(sr_exit_code(SR_E_VALIDATION) == 2);
  CHECK(sr_exit_code(SR_E_ARGUMENT) == 2);
  CHECK(sr_exit_code(SR_E_NUMERICAL) == 3);
  CHECK(sr_exit_code(SR_E_STATISTICAL_POWER) == 4);
}

TEST_CASE("null arguments are rejected") {
  sr_scenario* s = nullptr;
  CHECK(sr_scenario_load(nullptr, &s) == SR_E_ARGUMENT);
  CHECK(std::string(sr_last_error()).find("null") != std::string::npos);
  double v = 0;
  CHECK(sr_scenario_horizon(nullptr, &v) == SR_E_ARGUMENT);
  CHECK(sr_first_passage_loss(1, 0, 1, 1, nullptr) == SR_E_ARGUMENT);
  sr_scenario_free(nullptr);
  sr_noise_free(nullptr);
  sr_kernel_free(nullptr);
}

TEST_CASE("loading errors carry a status and a message") {
  sr_scenario* s = nullptr;
  CHECK(sr_scenario_load((kSource / "tests/data/missing_sigma.scenario").string().c_str(), &s) == SR_E_VALIDATION);
  CHECK(s == nullptr);
  CHECK(std::string(sr_last_error()).find("model.sigma") != std::string::npos);
  const sr_status st = sr_scenario_load("/nonexistent/x.scenario", &s);
  CHECK(st != SR_OK);
  CHECK(std::strlen(sr_last_error()) > 0);
}

TEST_CASE("scenario accessors and overrides") {
  Scenario sc(kTiny);
  uint64_t seed = 0;
  double T = 0;
  REQUIRE(sr_scenario_seed(sc.h, &seed) == SR_OK);
  REQUIRE(sr_scenario_horizon(sc.h, &T) == SR_OK);
  CHECK(seed == 3);
  CHECK(T == doctest::Approx(0.2));
  CHECK(sr_scenario_set_seed(sc.h, 77) == SR_OK);
  CHECK(sr_scenario_set_threads(sc.h, 2) == SR_OK);
  REQUIRE(sr_scenario_seed(sc.h, &seed) == SR_OK);
  CHECK(seed == 77);
}

TEST_CASE("noise paths round trip through files") {
  Scenario sc(kTiny);
  sr_noise* a = nullptr;
  REQUIRE(sr_noise_from_seed(sc.h, 5, &a) == SR_OK);
  double dt = 0;
  size_t n = 0;
  uint64_t ha = 0, hb = 0;
  REQUIRE(sr_noise_info(a, &dt, &n, &ha) == SR_OK);
  CHECK(dt == doctest::Approx(5e-4));
  CHECK(n == 400);

  const fs::path file = scratch("noise") / "noise.csv";
  REQUIRE(sr_noise_save(a, file.string().c_str()) == SR_OK);
  sr_noise* b = nullptr;
  REQUIRE(sr_noise_load(file.string().c_str(), &b) == SR_OK);
  REQUIRE(sr_noise_info(b, nullptr, nullptr, &hb) == SR_OK);
  CHECK(ha == hb);

  sr_noise* c = nullptr;
  REQUIRE(sr_noise_from_seed(sc.h, 6, &c) == SR_OK);
  uint64_t hc = 0;
  sr_noise_info(c, nullptr, nullptr, &hc);
  CHECK(hc != ha);
  sr_noise_free(a);
  sr_noise_free(b);
  sr_noise_free(c);
}

TEST_CASE("solvers write outputs and compare") {
  Scenario sc(kTiny);
  sr_noise* noise = nullptr;
  REQUIRE(sr_noise_from_seed(sc.h, 3, &noise) == SR_OK);
  const fs::path root = scratch("solve");
  const fs::path p = root / "particles", q = root / "spde";
  REQUIRE(sr_simulate_particles(sc.h, noise, p.string().c_str()) == SR_OK);
  REQUIRE(sr_solve_spde(sc.h, noise, q.string().c_str()) == SR_OK);
  CHECK(fs::exists(p / "observables.csv"));
  CHECK(fs::exists(q / "observables.csv"));
  CHECK(fs::exists(q / "density_0.2.csv"));

  const fs::path cmp = root / "comparison.csv";
  REQUIRE(sr_compare(p.string().c_str(), q.string().c_str(), cmp.string().c_str()) == SR_OK);
  CHECK(fs::exists(cmp));

  // Same seed through the default path reproduces the particle run.
  const fs::path p2 = root / "particles_default";
  REQUIRE(sr_simulate_particles(sc.h, nullptr, p2.string().c_str()) == SR_OK);
  CHECK(last_line(p / "observables.csv") == last_line(p2 / "observables.csv"));
  sr_noise_free(noise);
}

TEST_CASE("run, validate and seed search") {
  Scenario sc(kTiny);
  const fs::path out = scratch("run");
  REQUIRE(sr_run(sc.h, out.string().c_str(), "paired") == SR_OK);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "paired"));
  CHECK_FALSE(fs::exists(out / "scaling"));
  CHECK(sr_run(sc.h, out.string().c_str(), "nope") == SR_E_VALIDATION);

  size_t checks = 0, failed = 99;
  const fs::path report = out / "report.csv";
  REQUIRE(sr_validate(sc.h, report.string().c_str(), &checks, &failed) == SR_OK);
  CHECK(checks > 0);
  CHECK(failed == 0);
  CHECK(fs::exists(report));

  uint64_t seed = 0;
  REQUIRE(sr_search_seed(sc.h, "down", 0, &seed) == SR_OK);
  sr_noise* noise = nullptr;
  REQUIRE(sr_noise_from_seed(sc.h, seed, &noise) == SR_OK);
  CHECK(sr_search_seed(sc.h, "missing", 0, &seed) == SR_E_VALIDATION);
  sr_noise_free(noise);
}

TEST_CASE("kernel and closed forms") {
  sr_kernel* k = nullptr;
  CHECK(sr_kernel_triangle(-1.0, &k) == SR_E_VALIDATION);
  REQUIRE(sr_kernel_triangle(0.01, &k) == SR_OK);
  double f = 0, F = 0;
  REQUIRE(sr_kernel_eval(k, 0.01, &f, &F) == SR_OK);
  CHECK(F == doctest::Approx(1.0));
  REQUIRE(sr_kernel_eval(k, -0.5, &f, &F) == SR_OK);
  CHECK(F == 0.0);
  CHECK(f == 0.0);
  sr_kernel_free(k);

  double L = 0;
  REQUIRE(sr_first_passage_loss(1.0, 0.0, 1.0, 1.0, &L) == SR_OK);
  CHECK(L == doctest::Approx(0.31731).epsilon(1e-4));
  CHECK(sr_first_passage_loss(1.0, 0.0, -1.0, 1.0, &L) == SR_E_VALIDATION);

  double g = 0;
  REQUIRE(sr_dirichlet_heat_kernel(0.5, 1.0, 1.2, &g) == SR_OK);
  const double expect = (std::exp(-0.04 / 1.0) - std::exp(-4.84 / 1.0)) / std::sqrt(2 * M_PI * 0.5);
  CHECK(g == doctest::Approx(expect).epsilon(1e-10));
}
