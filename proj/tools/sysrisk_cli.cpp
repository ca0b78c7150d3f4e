// Command-line front end. Talks to the engine only through the C API.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sysrisk/sysrisk.h"

namespace {

struct ScenarioDeleter {
  void operator()(sr_scenario* s) const { sr_scenario_free(s); }
};
struct NoiseDeleter {
  void operator()(sr_noise* n) const { sr_noise_free(n); }
};
using ScenarioPtr = std::unique_ptr<sr_scenario, ScenarioDeleter>;
using NoisePtr = std::unique_ptr<sr_noise, NoiseDeleter>;

int report(sr_status st, const char* verb) {
  if (st != SR_OK) std::fprintf(stderr, "sysrisk %s: %s\n", verb, sr_last_error());
  return sr_exit_code(st);
}

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Common& c, const char* out_help) {
  cmd->add_option("--scenario", c.scenario, "scenario file or manifest.json")->required();
  cmd->add_option("--out", c.out, out_help)->required();
  cmd->add_option("--seed-override", c.seed, "replace the scenario's master seed");
  cmd->add_option("--threads", c.threads, "worker threads");
}

sr_status open_scenario(const Common& c, ScenarioPtr& out) {
  sr_scenario* raw = nullptr;
  sr_status st = sr_scenario_load(c.scenario.c_str(), &raw);
  if (st != SR_OK) return st;
  out.reset(raw);
  if (c.seed) sr_scenario_set_seed(raw, *c.seed);
  if (c.threads) sr_scenario_set_threads(raw, *c.threads);
  return SR_OK;
}

// --noise accepts a noise.csv file or an integer seed.
sr_status open_noise(const sr_scenario* scn, const std::string& spec, NoisePtr& out) {
  if (spec.empty()) return SR_OK;
  sr_noise* raw = nullptr;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(spec.c_str(), &end, 10);
  const sr_status st = (*end == '\0' && !spec.empty()) ? sr_noise_from_seed(scn, seed, &raw)
                                                       : sr_noise_load(spec.c_str(), &raw);
  if (st == SR_OK) out.reset(raw);
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Systemic-risk engine: absorbed particle systems with contagion and their limit SPDE"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sr_version()));

  Common part, spde, val, run;
  std::string part_noise, spde_noise;
  auto* c_part = app.add_subcommand("simulate-particles", "simulate the particle system");
  add_common(c_part, part, "output directory");
  c_part->add_option("--noise", part_noise, "noise.csv file or seed for the common noise");

  auto* c_spde = app.add_subcommand("solve-spde", "solve the density SPDE");
  add_common(c_spde, spde, "output directory");
  c_spde->add_option("--noise", spde_noise, "noise.csv file or seed for the common noise");

  std::string cmp_particles, cmp_spde, cmp_out;
  auto* c_cmp = app.add_subcommand("compare", "distances between particle and SPDE snapshots");
  c_cmp->add_option("--particles", cmp_particles, "particle run directory")->required();
  c_cmp->add_option("--spde", cmp_spde, "SPDE run directory")->required();
  c_cmp->add_option("--out", cmp_out, "comparison.csv path")->required();

  auto* c_val = app.add_subcommand("validate", "run the scenario's validation checks");
  add_common(c_val, val, "report.csv path");

  std::vector<std::string> experiments;
  auto* c_run = app.add_subcommand("run", "run the scenario's experiments");
  add_common(c_run, run, "output directory");
  c_run->add_option("--experiment", experiments, "run only the named experiment(s)");

  Common search;
  std::string regime;
  std::uint64_t start = 1;
  auto* c_search = app.add_subcommand("search-seed", "find a seed whose common noise lies in a declared band");
  c_search->add_option("--scenario", search.scenario, "scenario file")->required();
  c_search->add_option("--regime", regime, "noise regime name (default: noise.band)");
  c_search->add_option("--start", start, "first seed to try");

  std::string r_in, r_out, r_panels;
  auto* c_render = app.add_subcommand("render", "render heat maps and time series (needs plotview)");
  c_render->add_option("--in", r_in, "run directory")->required();
  c_render->add_option("--out", r_out, "image directory")->required();
  c_render->add_option("--panels", r_panels, "panel layout, e.g. paired");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ScenarioPtr scn;
  NoisePtr noise;
  if (c_part->parsed()) {
    sr_status st = open_scenario(part, scn);
    if (st == SR_OK) st = open_noise(scn.get(), part_noise, noise);
    if (st == SR_OK) st = sr_simulate_particles(scn.get(), noise.get(), part.out.c_str());
    return report(st, "simulate-particles");
  }
  if (c_spde->parsed()) {
    sr_status st = open_scenario(spde, scn);
    if (st == SR_OK) st = open_noise(scn.get(), spde_noise, noise);
    if (st == SR_OK) st = sr_solve_spde(scn.get(), noise.get(), spde.out.c_str());
    return report(st, "solve-spde");
  }
  if (c_cmp->parsed()) return report(sr_compare(cmp_particles.c_str(), cmp_spde.c_str(), cmp_out.c_str()), "compare");
  if (c_val->parsed()) {
    sr_status st = open_scenario(val, scn);
    std::size_t checks = 0, failed = 0;
    if (st == SR_OK) st = sr_validate(scn.get(), val.out.c_str(), &checks, &failed);
    if (st == SR_OK || st == SR_E_CHECK_FAILED)
      std::printf("%zu checks, %zu failed; report in %s\n", checks, failed, val.out.c_str());
    return report(st, "validate");
  }
  if (c_run->parsed()) {
    sr_status st = open_scenario(run, scn);
    for (std::size_t i = 0; st == SR_OK && i < std::max<std::size_t>(1, experiments.size()); ++i) {
      const char* name = experiments.empty() ? nullptr : experiments[i].c_str();
      st = sr_run(scn.get(), experiments.size() > 1 ? (run.out + "/" + experiments[i]).c_str() : run.out.c_str(), name);
    }
    return report(st, "run");
  }
  if (c_search->parsed()) {
    sr_status st = open_scenario(search, scn);
    std::uint64_t seed = 0;
    if (st == SR_OK) st = sr_search_seed(scn.get(), regime.empty() ? nullptr : regime.c_str(), start, &seed);
    if (st == SR_OK) std::printf("%llu\n", static_cast<unsigned long long>(seed));
    return report(st, "search-seed");
  }
  if (c_render->parsed()) {
    // Rendering lives in the optional Python plotview package.
    const char* cmd = std::getenv("SYSRISK_PLOTVIEW");
    std::string line = std::string(cmd ? cmd : "python3 -m plotview") + " render --in '" + r_in + "' --out '" + r_out + "'";
    if (!r_panels.empty()) line += " --panels '" + r_panels + "'";
    const int rc = std::system(line.c_str());
    if (rc != 0) {
      std::fprintf(stderr, "sysrisk render: plotview failed or is not installed (%s)\n", line.c_str());
      return 2;
    }
    return 0;
  }
  return 2;
}
