// Acceptance suite: one PASS/FAIL line per criterion over the shipped scenarios.
// Usage: acceptance [output dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"
#include "experiments.hpp"
#include "scenarios.hpp"

using namespace sysrisk;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(SYSRISK_SOURCE_DIR) / "scenarios";

struct Outcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<Outcome> outcomes;

void report(const std::string& name, bool passed, const std::string& detail) {
  outcomes.push_back({name, passed, detail});
  std::printf("%s  %-28s %s\n", passed ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const ExperimentResult& find(const std::vector<ExperimentResult>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return r;
  throw Error(ErrorKind::Validation, "experiment '" + name + "' missing");
}

double get(const ExperimentResult& r, const std::string& key) {
  const auto it = r.summary.find(key);
  if (it == r.summary.end()) throw Error(ErrorKind::Validation, "summary key '" + key + "' missing in " + r.name);
  return it->second;
}

const CheckRow* row(const std::vector<CheckRow>& rows, const std::string& check, const std::string& stat) {
  for (const auto& r : rows)
    if (r.check == check && r.statistic == stat) return &r;
  return nullptr;
}

bool rows_pass(const std::vector<CheckRow>& rows, const std::string& check, std::size_t& count) {
  bool ok = true;
  count = 0;
  for (const auto& r : rows)
    if (r.check == check) {
      ++count;
      ok = ok && r.passed;
    }
  return ok && count > 0;
}

// Hashes of every regular file under root except the manifest, keyed by relative path.
std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root, const std::string& only_name = {}) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name == "manifest.json") continue;
    if (!only_name.empty() && name != only_name) continue;
    out[fs::relative(e.path(), root).string()] = hash_file(e.path());
  }
  return out;
}

template <class F>
void guarded(const std::string& name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(name, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "sysrisk_acceptance";
  fs::remove_all(out);
  fs::create_directories(out);
  const auto t0 = std::chrono::steady_clock::now();

  std::map<std::string, Scenario> shipped;
  for (const char* name : {"heat_kernel", "first_passage", "fig1", "fig2", "bounded_drift", "kernel_sweep"})
    shipped.emplace(name, load_scenario(kScenarios / (std::string(name) + ".scenario")));

  guarded("heat_kernel", [&] {
    const auto rows = validate(shipped.at("heat_kernel"), out / "heat_kernel_report.csv");
    const CheckRow* e = row(rows, "heat_kernel", "linf_error_t0.25");
    const CheckRow* rt = row(rows, "heat_kernel", "runtime_seconds");
    const bool ok = e && rt && e->value <= 2e-3 && rt->value <= 30.0;
    report("heat_kernel", ok,
           e && rt ? fmt("Linf=%.3g", e->value) + " (<=2e-3)" + fmt(" runtime=%.2fs", rt->value) + " (<=30s)"
                   : "rows missing");
  });

  guarded("first_passage", [&] {
    const auto rows = validate(shipped.at("first_passage"), out / "first_passage_report.csv");
    std::size_t n = 0;
    const bool ok = rows_pass(rows, "first_passage", n) && n == 7;
    double err = 0.0, z = 0.0;
    for (const auto& r : rows) {
      if (r.statistic.rfind("spde_abs_error", 0) == 0) err = std::max(err, r.value);
      if (r.statistic.rfind("particles_abs_z", 0) == 0) z = std::max(z, r.value);
    }
    const CheckRow* rt = row(rows, "first_passage", "runtime_seconds");
    report("first_passage", ok,
           fmt("max SPDE error=%.3g", err) + " (<=5e-3)" + fmt(" max |z|=%.2f", z) + " (<=3)" +
               fmt(" runtime=%.1fs", rt ? rt->value : -1.0) + " (<=120s)");
  });

  // Every shipped scenario's experiments; summaries feed the criteria below.
  std::map<std::string, std::vector<ExperimentResult>> results;
  for (const auto& [name, s] : shipped) {
    guarded("run_" + name, [&] { results[name] = run_experiments(s, out / name); });
  }

  guarded("conservation", [&] {
    double worst_p = 0.0, worst_s = 0.0, clipped = 0.0;
    bool monotone = true;
    std::size_t runs = 0;
    for (const auto& [name, rs] : results)
      for (const auto& e : rs)
        for (const auto& r : e.runs) {
          ++runs;
          (r.solver == "spde" ? worst_s : worst_p) = std::max(r.solver == "spde" ? worst_s : worst_p,
                                                              r.max_mass_balance_error);
          clipped = std::max(clipped, r.clipped_mass);
          monotone = monotone && r.L_monotone && r.Lfrak_monotone;
        }
    for (const char* name : {"heat_kernel", "first_passage"}) {
      const auto rows = validate(shipped.at(name), out / (std::string(name) + "_conservation.csv"));
      for (const auto& r : rows)
        if (r.check == "conservation") monotone = monotone && r.passed;
    }
    const bool ok = runs > 0 && results.size() == shipped.size() && worst_p <= 1e-12 && worst_s <= 1e-8 &&
                    clipped <= 1e-5 && monotone;
    report("conservation", ok,
           std::to_string(runs) + " runs" + fmt(" particles=%.2g", worst_p) + " (<=1e-12)" +
               fmt(" spde=%.2g", worst_s) + " (<=1e-8)" + fmt(" clipped=%.2g", clipped) + " (<=1e-5)" +
               (monotone ? " monotone" : " NOT monotone"));
  });

  guarded("convergence", [&] {
    const auto& e = find(results.at("fig1"), "convergence");
    const double slope = get(e, "slope_L_diff");
    const bool dec = get(e, "d1_strictly_decreasing") == 1.0;
    const bool ok = dec && slope >= -0.7 && slope <= -0.3 && get(e, "seeds") == 20;
    report("convergence", ok,
           fmt("d1 N=1e3/1e4/1e5: %.4g", get(e, "mean_d1_N1000")) + fmt("/%.4g", get(e, "mean_d1_N10000")) +
               fmt("/%.4g", get(e, "mean_d1_N100000")) + (dec ? " decreasing" : " NOT decreasing") +
               fmt(" slope=%.3f", slope) + " (in [-0.7,-0.3])");
  });

  guarded("dominance", [&] {
    const auto& e = find(results.at("fig1"), "paired");
    bool ok = true;
    std::string detail;
    for (const char* solver : {"particles", "spde"}) {
      const std::string key = std::string(solver) + "_0_1.5";
      const double count = get(e, "dominance_count_" + key), total = get(e, "dominance_total_" + key);
      ok = ok && total == 20 && count >= 19;
      detail += std::string(solver) + "=" + std::to_string(int(count)) + "/" + std::to_string(int(total)) + " ";
    }
    report("dominance", ok, detail + "(>=19/20)");
  });

  guarded("fig2_regimes", [&] {
    const auto& e = find(results.at("fig2"), "regimes");
    double dec = -1, ris = -1, pdec = -1, pris = -1;
    for (const auto& r : e.runs) {
      const double LT = r.L.empty() ? -1.0 : r.L.back();
      const bool declining = r.dir.find("declining") != std::string::npos;
      if (r.solver == "spde") (declining ? dec : ris) = LT;
      else (declining ? pdec : pris) = LT;
    }
    const bool ok = dec >= 0.9 && ris >= 0.0 && ris <= 0.2;
    report("fig2_regimes", ok,
           fmt("SPDE declining L_T=%.4f", dec) + " (>=0.9)" + fmt(" rising L_T=%.4f", ris) + " (<=0.2)" +
               fmt("; particles %.4f", pdec) + fmt("/%.4f", pris));
  });

  guarded("boundary_decay", [&] {
    Scenario s = shipped.at("fig1");
    s.validation.checks = {"boundary_decay", "gaussian_tail"};
    const auto rows = validate(s, out / "fig1_report.csv");
    const CheckRow* ex = row(rows, "boundary_decay", "power_law_exponent");
    report("boundary_decay", ex && ex->value >= 1.05, fmt("exponent=%.3f", ex ? ex->value : NAN) + " (>=1.05)");
    const CheckRow* sl = row(rows, "gaussian_tail", "lambda2_slope");
    const CheckRow* r2 = row(rows, "gaussian_tail", "lambda2_r2");
    const bool ok = sl && r2 && sl->value < 0.0 && r2->value >= 0.9;
    report("gaussian_tails", ok,
           fmt("slope=%.4f", sl ? sl->value : NAN) + " (<0)" + fmt(" R2=%.4f", r2 ? r2->value : NAN) + " (>=0.9)");
  });

  guarded("aronson", [&] {
    Scenario s = shipped.at("bounded_drift");
    s.validation.checks = {"aronson"};
    const auto rows = validate(s, out / "bounded_drift_report.csv");
    const CheckRow* C = row(rows, "aronson", "admissible_C");
    const CheckRow* v = row(rows, "aronson", "violations_at_largest_C");
    const bool ok = C && v && C->passed && v->value == 0.0 && s.validation.bound_paths == 200;
    report("aronson", ok,
           fmt("admissible C=%.4g", C ? C->value : NAN) + fmt(" violations=%.0f", v ? v->value : NAN) +
               " (kappa=0.9, c=4, 200 paths)");
  });

  guarded("kernel_sweep", [&] {
    const auto& e = find(results.at("kernel_sweep"), "sweep");
    bool ok = true;
    std::string detail;
    for (const auto& [key, v] : e.summary) {
      if (key.rfind("strictly_increasing_", 0) == 0) {
        ok = ok && v == 1.0;
        detail += key.substr(20) + (v == 1.0 ? "=increasing " : "=NOT increasing ");
      }
    }
    for (const auto& [key, v] : e.summary)
      if (key.rfind("max_increment_", 0) == 0) detail += fmt(("" + key.substr(14) + "=%.4f ").c_str(), v);
    report("kernel_sweep", ok && !detail.empty(), detail);
  });

  guarded("determinism", [&] {
    const Scenario rerun = load_scenario(out / "fig2" / "manifest.json");
    run_experiments(rerun, out / "fig2_rerun");
    const auto a = tree_hashes(out / "fig2"), b = tree_hashes(out / "fig2_rerun");
    const bool same_manifest = !a.empty() && a == b;

    std::vector<std::map<std::string, std::uint64_t>> sweeps;
    for (unsigned threads : {1u, 4u, 8u}) {
      Scenario s = shipped.at("fig2");
      override_threads(s, threads);
      const fs::path dir = out / ("threads_" + std::to_string(threads));
      run_experiments(s, dir);
      sweeps.push_back(tree_hashes(dir, "observables.csv"));
    }
    const bool same_threads = !sweeps[0].empty() && sweeps[0] == sweeps[1] && sweeps[0] == sweeps[2];
    report("determinism", same_manifest && same_threads,
           std::string("manifest re-run ") + (same_manifest ? "identical" : "DIFFERS") + " (" +
               std::to_string(a.size()) + " files); threads 1/4/8 " + (same_threads ? "identical" : "DIFFER") +
               " (" + std::to_string(sweeps[0].size()) + " observables.csv)");
  });

  std::size_t failed = 0;
  for (const auto& o : outcomes) failed += o.passed ? 0 : 1;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%zu criteria, %zu failed, %.0f s\n", outcomes.size(), failed, secs);
  return failed ? 1 : 0;
}
