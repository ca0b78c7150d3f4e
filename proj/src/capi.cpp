#include "sysrisk/sysrisk.h"

#include <string>

#include "error.hpp"
#include "experiments.hpp"

struct sr_scenario {
  sysrisk::Scenario s;
};

struct sr_noise {
  sysrisk::NoisePath n;
};

struct sr_kernel {
  sysrisk::ImpactKernel k;
};

namespace {

thread_local std::string last_error;

sr_status status_of(sysrisk::ErrorKind kind) {
  switch (sysrisk::exit_code(kind)) {
    case 3: return SR_E_NUMERICAL;
    case 4: return SR_E_STATISTICAL_POWER;
    default: break;
  }
  return kind == sysrisk::ErrorKind::Io ? SR_E_IO : SR_E_VALIDATION;
}

template <class F>
sr_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const sysrisk::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return SR_E_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SR_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return SR_E_INTERNAL;
  }
}

sr_status null_argument(const char* name) {
  last_error = std::string("null argument: ") + name;
  return SR_E_ARGUMENT;
}

#define SR_REQUIRE(p) \
  if (!(p)) return null_argument(#p)

}  // namespace

extern "C" {

const char* sr_version(void) { return sysrisk::kVersion; }

const char* sr_last_error(void) { return last_error.c_str(); }

int sr_exit_code(sr_status status) {
  switch (status) {
    case SR_OK: return 0;
    case SR_E_NUMERICAL: return 3;
    case SR_E_STATISTICAL_POWER: return 4;
    case SR_E_INTERNAL: return 1;
    default: return 2;
  }
}

sr_status sr_scenario_load(const char* path, sr_scenario** out) {
  SR_REQUIRE(path);
  SR_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new sr_scenario{sysrisk::load_scenario(path)};
    return SR_OK;
  });
}

void sr_scenario_free(sr_scenario* scenario) { delete scenario; }

sr_status sr_scenario_set_seed(sr_scenario* scenario, uint64_t seed) {
  SR_REQUIRE(scenario);
  sysrisk::override_seed(scenario->s, seed);
  return SR_OK;
}

sr_status sr_scenario_set_threads(sr_scenario* scenario, unsigned threads) {
  SR_REQUIRE(scenario);
  sysrisk::override_threads(scenario->s, threads);
  return SR_OK;
}

sr_status sr_scenario_seed(const sr_scenario* scenario, uint64_t* out) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out);
  *out = scenario->s.seed;
  return SR_OK;
}

sr_status sr_scenario_horizon(const sr_scenario* scenario, double* out) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out);
  *out = scenario->s.horizon;
  return SR_OK;
}

sr_status sr_noise_from_seed(const sr_scenario* scenario, uint64_t seed, sr_noise** out) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new sr_noise{sysrisk::scenario_noise(scenario->s, seed)};
    return SR_OK;
  });
}

sr_status sr_noise_load(const char* path, sr_noise** out) {
  SR_REQUIRE(path);
  SR_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new sr_noise{sysrisk::read_noise(path)};
    return SR_OK;
  });
}

sr_status sr_noise_save(const sr_noise* noise, const char* path) {
  SR_REQUIRE(noise);
  SR_REQUIRE(path);
  return guarded([&] {
    sysrisk::write_noise(noise->n, path);
    return SR_OK;
  });
}

void sr_noise_free(sr_noise* noise) { delete noise; }

sr_status sr_noise_info(const sr_noise* noise, double* dt, size_t* length, uint64_t* hash) {
  SR_REQUIRE(noise);
  if (dt) *dt = noise->n.dt;
  if (length) *length = noise->n.increments.size();
  if (hash) *hash = sysrisk::hash_increments(noise->n.increments);
  return SR_OK;
}

sr_status sr_simulate_particles(const sr_scenario* scenario, const sr_noise* noise, const char* out_dir) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out_dir);
  return guarded([&] {
    const auto n = noise ? noise->n : sysrisk::scenario_noise(scenario->s, scenario->s.seed);
    sysrisk::simulate_particles(scenario->s, n, out_dir);
    return SR_OK;
  });
}

sr_status sr_solve_spde(const sr_scenario* scenario, const sr_noise* noise, const char* out_dir) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out_dir);
  return guarded([&] {
    const auto n = noise ? noise->n : sysrisk::scenario_noise(scenario->s, scenario->s.seed);
    sysrisk::solve_spde(scenario->s, n, out_dir);
    return SR_OK;
  });
}

sr_status sr_run(const sr_scenario* scenario, const char* out_dir, const char* experiment) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out_dir);
  return guarded([&] {
    sysrisk::RunOptions opts;
    if (experiment) opts.only.push_back(experiment);
    sysrisk::run_experiments(scenario->s, out_dir, opts);
    return SR_OK;
  });
}

sr_status sr_compare(const char* particles_dir, const char* spde_dir, const char* out_csv) {
  SR_REQUIRE(particles_dir);
  SR_REQUIRE(spde_dir);
  SR_REQUIRE(out_csv);
  return guarded([&] {
    sysrisk::compare_runs(particles_dir, spde_dir, out_csv);
    return SR_OK;
  });
}

sr_status sr_validate(const sr_scenario* scenario, const char* out_csv, size_t* checks, size_t* failed) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out_csv);
  return guarded([&] {
    const auto rows = sysrisk::validate(scenario->s, out_csv);
    size_t bad = 0;
    for (const auto& r : rows) bad += r.passed ? 0 : 1;
    if (checks) *checks = rows.size();
    if (failed) *failed = bad;
    if (bad) last_error = std::to_string(bad) + " of " + std::to_string(rows.size()) + " checks failed";
    return bad ? SR_E_CHECK_FAILED : SR_OK;
  });
}

sr_status sr_search_seed(const sr_scenario* scenario, const char* regime, uint64_t start, uint64_t* out) {
  SR_REQUIRE(scenario);
  SR_REQUIRE(out);
  return guarded([&] {
    const sysrisk::NoiseBand* band = &scenario->s.noise.band;
    if (regime) {
      band = nullptr;
      for (const auto& r : scenario->s.noise.regimes)
        if (r.name == regime) band = &r.band;
      sysrisk::require(band != nullptr, sysrisk::ErrorKind::Validation, std::string("unknown noise regime '") + regime + "'");
    }
    *out = sysrisk::search_seed(scenario->s, *band, start);
    return SR_OK;
  });
}

sr_status sr_kernel_triangle(double support_end, sr_kernel** out) {
  SR_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new sr_kernel{sysrisk::ImpactKernel::triangle(support_end)};
    return SR_OK;
  });
}

void sr_kernel_free(sr_kernel* kernel) { delete kernel; }

sr_status sr_kernel_eval(const sr_kernel* kernel, double u, double* density, double* cumulative) {
  SR_REQUIRE(kernel);
  if (density) *density = kernel->k.density(u);
  if (cumulative) *cumulative = kernel->k.cumulative(u);
  return SR_OK;
}

sr_status sr_first_passage_loss(double x0, double b, double sigma, double t, double* out) {
  SR_REQUIRE(out);
  return guarded([&] {
    *out = sysrisk::first_passage_loss(x0, b, sigma, t);
    return SR_OK;
  });
}

sr_status sr_dirichlet_heat_kernel(double t, double x, double y, double* out) {
  SR_REQUIRE(out);
  return guarded([&] {
    *out = sysrisk::dirichlet_heat_kernel(t, x, y);
    return SR_OK;
  });
}

}  // extern "C"
