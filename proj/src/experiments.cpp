#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <regex>

#include "csv.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace sysrisk {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t stride_steps(double every, double dt) {
  if (every <= 0.0) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(every / dt)));
}

std::string number_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool near_time(double a, double b, double dt) { return std::abs(a - b) <= 0.5 * dt * (1.0 + 1e-9); }

void fill_series_flags(RunSummary& r, double L_tol, double Lfrak_tol) {
  for (std::size_t k = 1; k < r.L.size(); ++k) {
    if (r.L[k] < r.L[k - 1] - L_tol) r.L_monotone = false;
    if (r.Lfrak[k] < r.Lfrak[k - 1] - Lfrak_tol) r.Lfrak_monotone = false;
    if (r.first_default_time < 0.0 && r.L[k] > r.L[0]) r.first_default_time = r.t[k];
  }
}

RunSummary summarize(const ParticleRun& run, const ParticleConfig& cfg, std::uint64_t noise_hash) {
  RunSummary r;
  r.solver = "particles";
  r.seed = cfg.seed;
  r.N = cfg.N;
  r.noise_hash = noise_hash;
  const auto& tr = run.trajectory;
  r.t = tr.t;
  for (const auto& o : tr.obs) {
    r.L.push_back(o.L);
    r.Lfrak.push_back(o.Lfrak);
    r.M.push_back(o.M);
  }
  for (double e : tr.mass_balance_error) r.max_mass_balance_error = std::max(r.max_mass_balance_error, e);
  for (double s : tr.step_seconds) r.wall_seconds += s;
  fill_series_flags(r, 0.0, 1e-12);
  return r;
}

RunSummary summarize(const SpdeRunRecord& rec, std::uint64_t noise_hash) {
  RunSummary r;
  r.solver = "spde";
  r.noise_hash = noise_hash;
  r.t = rec.t;
  r.L = rec.L;
  r.Lfrak = rec.Lfrak;
  r.M = rec.M;
  for (double e : rec.mass_balance_error) r.max_mass_balance_error = std::max(r.max_mass_balance_error, e);
  r.clipped_mass = rec.clipped_cumulative.empty() ? 0.0 : rec.clipped_cumulative.back();
  r.wall_seconds = rec.wall_seconds;
  r.warnings = rec.warnings;
  fill_series_flags(r, 0.0, 1e-12);
  return r;
}

void write_particle_outputs(const ParticleRun& run, const ParticleConfig& cfg, const OutputConfig& out,
                            const fs::path& dir) {
  fs::create_directories(dir);
  const auto& tr = run.trajectory;
  const std::size_t stride = stride_steps(out.observables_every, cfg.dt);
  {
    CsvWriter w(dir / "observables.csv", {"t", "L", "M", "Lfrak", "Lfrak_rate", "alive_count"});
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      if (k % stride != 0 && k + 1 != tr.t.size()) continue;
      const auto& o = tr.obs[k];
      w.field(tr.t[k]).field(o.L).field(o.M).field(o.Lfrak).field(o.Lfrak_rate);
      w.field(static_cast<unsigned long long>(tr.alive_count[k]));
      w.end_row();
    }
  }
  for (const auto& snap : run.snapshots) {
    const std::string label = time_label(snap.t);
    {
      CsvWriter w(dir / ("histogram_" + label + ".csv"), {"x_lo", "x_hi", "density"});
      const auto& h = snap.histogram;
      for (std::size_t j = 0; j < h.density.size(); ++j) {
        w.field(h.bin_width * static_cast<double>(j)).field(h.bin_width * static_cast<double>(j + 1));
        w.field(h.density[j]);
        w.end_row();
      }
    }
    CsvWriter w(dir / ("particles_" + label + ".csv"), {"x", "weight"});
    for (std::size_t i = 0; i < snap.x.size(); ++i) {
      w.field(snap.x[i]).field(snap.weight[i]);
      w.end_row();
    }
  }
  if (!run.paths.empty()) {
    CsvWriter w(dir / "paths.csv", {"t", "particle_id", "x", "alive"});
    for (const auto& p : run.paths) {
      w.field(p.t).field(static_cast<unsigned long long>(p.particle)).field(p.x);
      w.field(static_cast<unsigned long long>(p.alive ? 1 : 0));
      w.end_row();
    }
  }
}

void write_spde_outputs(const SpdeRunRecord& rec, const SpdeConfig& cfg, const OutputConfig& out,
                        const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t stride = stride_steps(out.observables_every, cfg.dt);
  {
    CsvWriter w(dir / "observables.csv", {"t", "L", "M", "Lfrak", "flux0"});
    for (std::size_t k = 0; k < rec.t.size(); ++k) {
      if (k % stride != 0 && k + 1 != rec.t.size()) continue;
      w.field(rec.t[k]).field(rec.L[k]).field(rec.M[k]).field(rec.Lfrak[k]).field(rec.flux0[k]);
      w.end_row();
    }
  }
  if (out.heatgrid_stride > 0) {
    CsvWriter w(dir / "heatgrid.csv", {"t", "x", "V"});
    for (const auto& g : rec.snapshots) {
      for (std::size_t j = 0; j < g.nx; j += out.heatgrid_x_stride) {
        w.field(g.t).field(g.center(j)).field(g.values[j]);
        w.end_row();
      }
    }
  }
  for (double ts : cfg.snapshot_times) {
    for (const auto& g : rec.snapshots) {
      if (!near_time(g.t, ts, cfg.dt)) continue;
      CsvWriter w(dir / ("density_" + time_label(ts) + ".csv"), {"x", "V"});
      for (std::size_t j = 0; j < g.nx; ++j) {
        w.field(g.center(j)).field(g.values[j]);
        w.end_row();
      }
      break;
    }
  }
}

struct SolverOutput {
  RunSummary summary;
  std::optional<ParticleRun> particles;
  std::optional<SpdeRunRecord> spde;
};

SolverOutput run_particles(const Scenario& s, const ModelCoefficients& model, const ImpactKernel& kernel,
                           const NoisePath& noise, std::uint64_t seed, std::size_t N, const fs::path& dir,
                           bool write, bool lean = false) {
  ParticleConfig cfg = particle_config(s, seed);
  cfg.N = N;
  if (lean) {
    // Large sweeps keep only the observables; the final state is compared in memory.
    cfg.snapshot_times.clear();
    cfg.dump_paths = false;
  }
  ParticleRun run = sysrisk::run(cfg, model, kernel, noise);
  if (write) write_particle_outputs(run, cfg, s.output, dir);
  SolverOutput out{summarize(run, cfg, hash_increments(noise.increments)), std::move(run), std::nullopt};
  return out;
}

SolverOutput run_spde(const Scenario& s, const ModelCoefficients& model, const ImpactKernel& kernel,
                      const NoisePath& noise, std::uint64_t seed, const fs::path& dir, bool write) {
  const SpdeConfig cfg = spde_config(s);
  const DensityGrid initial = init_density(s.initial, cfg.x_max, cfg.nx, cfg.truncation_budget);
  SpdeRunRecord rec = solve(initial, model, kernel, noise, cfg);
  if (write) write_spde_outputs(rec, cfg, s.output, dir);
  SolverOutput out{summarize(rec, hash_increments(noise.increments)), std::nullopt, std::move(rec)};
  out.summary.seed = seed;
  return out;
}

DiscreteMeasure particle_measure(const ParticleState& st) {
  std::vector<double> x, w;
  for (std::size_t i = 0; i < st.x.size(); ++i)
    if (st.alive[i]) {
      x.push_back(st.x[i]);
      w.push_back(st.weights[i]);
    }
  return DiscreteMeasure(std::move(x), std::move(w));
}

ImpactKernel rescaled_kernel(const ImpactKernel& base, double support) {
  if (base.shape() == KernelShape::IsoscelesTriangle) return ImpactKernel::triangle(support);
  const double scale = support / base.support_end();
  std::vector<KernelKnot> knots;
  for (const auto& k : base.knots()) knots.push_back({k.time * scale, k.value / scale});
  return ImpactKernel::piecewise_linear(std::move(knots));
}

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

// Seeds for an experiment: pinned regimes, or scanned seeds inside noise.band.
std::vector<std::pair<std::string, std::uint64_t>> seeds_for(const Scenario& s, const ExperimentConfig& e) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  if (e.use_regimes) {
    for (const auto& reg : s.noise.regimes) {
      const NoisePath noise = scenario_noise(s, reg.seed);
      require(reg.band.contains(noise), ErrorKind::Validation,
              "pinned seed " + std::to_string(reg.seed) + " of regime '" + reg.name + "' is outside its declared band");
      out.emplace_back(reg.name, reg.seed);
    }
    return out;
  }
  for (std::uint64_t seed : experiment_seeds(s, e.seeds)) out.emplace_back(seed_dir(seed), seed);
  return out;
}

// Strips the series from summaries that are only needed for flags.
void drop_series(RunSummary& r) {
  r.t.clear();
  r.L.clear();
  r.Lfrak.clear();
  r.M.clear();
  r.t.shrink_to_fit();
  r.L.shrink_to_fit();
  r.Lfrak.shrink_to_fit();
  r.M.shrink_to_fit();
}

DensitySamples ensemble_mean_density(const Scenario& s, const std::vector<std::uint64_t>& seeds,
                                     const std::vector<double>& times, std::size_t x_stride, Interval x_range,
                                     std::vector<RunSummary>* summaries) {
  Scenario local = s;
  local.output.snapshot_times = times;
  local.output.heatgrid_stride = 0;
  const SpdeConfig cfg = spde_config(local);
  const DensityGrid initial = init_density(s.initial, cfg.x_max, cfg.nx, cfg.truncation_budget);
  std::vector<std::size_t> cells;
  for (std::size_t j = 0; j < cfg.nx; j += x_stride) {
    const double x = initial.center(j);
    if (x >= x_range.first && x <= x_range.second) cells.push_back(j);
  }
  const std::size_t nt = times.size();
  std::vector<std::vector<double>> per_path(seeds.size());
  std::vector<RunSummary> runs(seeds.size());
  parallel_for(seeds.size(), s.threads, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t p = begin; p < end; ++p) {
      const NoisePath noise = scenario_noise(s, seeds[p]);
      SpdeRunRecord rec = solve(initial, s.model, s.kernel, noise, cfg);
      auto& values = per_path[p];
      values.assign(nt * cells.size(), 0.0);
      for (std::size_t i = 0; i < nt; ++i) {
        const DensityGrid* g = nullptr;
        for (const auto& snap : rec.snapshots)
          if (near_time(snap.t, times[i], cfg.dt)) g = &snap;
        require(g != nullptr, ErrorKind::Configuration, "ensemble time not on the SPDE grid");
        for (std::size_t c = 0; c < cells.size(); ++c) values[i * cells.size() + c] = g->values[cells[c]];
      }
      runs[p] = summarize(rec, hash_increments(noise.increments));
      runs[p].seed = seeds[p];
      drop_series(runs[p]);
    }
  });
  DensitySamples out;
  out.times = times;
  for (std::size_t c : cells) out.xs.push_back(initial.center(c));
  out.values.assign(nt * cells.size(), 0.0);
  out.paths = seeds.size();
  // Fixed reduction order keeps the mean independent of the thread count.
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    CompensatedSum acc;
    for (const auto& v : per_path) acc.add(v[k]);
    out.values[k] = acc.value() / static_cast<double>(seeds.size());
  }
  if (summaries) *summaries = std::move(runs);
  return out;
}

std::vector<double> snap_times(const std::vector<double>& ts, double dt) {
  std::vector<double> out;
  for (double t : ts) out.push_back(static_cast<double>(std::llround(t / dt)) * dt);
  return out;
}

ExperimentResult run_one(const Scenario& s, const ExperimentConfig& e, const fs::path& root, bool write) {
  ExperimentResult res;
  res.name = e.name;
  res.kind = e.kind;
  const auto start = Clock::now();
  const fs::path dir = root / e.name;
  auto add = [&](SolverOutput&& o, const fs::path& sub, double alpha, double support) {
    o.summary.dir = (fs::path(e.name) / sub).string();
    o.summary.alpha = alpha;
    o.summary.support = support;
    res.runs.push_back(std::move(o.summary));
  };
  const double base_alpha = s.model.alpha.is_constant() ? std::get<Coefficient::Constant>(s.model.alpha.form()).value
                                                        : std::numeric_limits<double>::quiet_NaN();
  const auto seeds = e.kind == ExperimentKind::Ensemble ? std::vector<std::pair<std::string, std::uint64_t>>{}
                                                        : seeds_for(s, e);

  switch (e.kind) {
    case ExperimentKind::Single: {
      for (const auto& [label, seed] : seeds) {
        const NoisePath noise = scenario_noise(s, seed);
        if (e.run_particles)
          add(run_particles(s, s.model, s.kernel, noise, seed, s.particles.N, dir / label / "particles", write),
              fs::path(label) / "particles", base_alpha, s.kernel.support_end());
        if (e.run_spde)
          add(run_spde(s, s.model, s.kernel, noise, seed, dir / label / "spde", write), fs::path(label) / "spde",
              base_alpha, s.kernel.support_end());
      }
      break;
    }
    case ExperimentKind::PairedAlpha: {
      std::optional<CsvWriter> table;
      if (write) table.emplace(dir / "paired.csv", std::vector<std::string>{"seed", "solver", "alpha_lo", "alpha_hi",
                                                                             "L_T_lo", "L_T_hi", "dominates", "strict"});
      std::map<std::string, std::size_t> dominated, total;
      for (const auto& [label, seed] : seeds) {
        const NoisePath noise = scenario_noise(s, seed);
        std::vector<std::size_t> first_idx;
        for (double a : e.alphas) {
          const ModelCoefficients m = with_alpha(s.model, a);
          const fs::path sub = fs::path(label) / ("alpha_" + number_label(a));
          if (e.run_particles) {
            first_idx.push_back(res.runs.size());
            add(run_particles(s, m, s.kernel, noise, seed, s.particles.N, dir / sub / "particles", write),
                sub / "particles", a, s.kernel.support_end());
          }
          if (e.run_spde)
            add(run_spde(s, m, s.kernel, noise, seed, dir / sub / "spde", write), sub / "spde", a,
                s.kernel.support_end());
        }
        // Compare consecutive alphas for each solver.
        for (const std::string solver : {"particles", "spde"}) {
          std::vector<const RunSummary*> chain;
          for (const auto& r : res.runs)
            if (r.seed == seed && r.solver == solver) chain.push_back(&r);
          for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            const RunSummary& lo = *chain[i];
            const RunSummary& hi = *chain[i + 1];
            bool dominates = lo.L.size() == hi.L.size();
            for (std::size_t k = 0; dominates && k < lo.L.size(); ++k)
              if (hi.L[k] < lo.L[k]) dominates = false;
            const bool strict = dominates && hi.L.back() > lo.L.back();
            const std::string key = solver + "_" + number_label(lo.alpha) + "_" + number_label(hi.alpha);
            total[key] += 1;
            dominated[key] += (dominates && strict) ? 1 : 0;
            if (table) {
              table->field(static_cast<unsigned long long>(seed)).field(solver).field(lo.alpha).field(hi.alpha);
              table->field(lo.L.back()).field(hi.L.back());
              table->field(static_cast<unsigned long long>(dominates)).field(static_cast<unsigned long long>(strict));
              table->end_row();
            }
          }
        }
      }
      for (const auto& [key, n] : total) {
        res.summary["dominance_count_" + key] = static_cast<double>(dominated[key]);
        res.summary["dominance_total_" + key] = static_cast<double>(n);
      }
      break;
    }
    case ExperimentKind::KernelSweep: {
      std::optional<CsvWriter> table;
      if (write) table.emplace(dir / "sweep.csv", std::vector<std::string>{"seed", "solver", "support", "max_increment", "L_T"});
      std::map<std::string, bool> increasing;
      for (const auto& [label, seed] : seeds) {
        const NoisePath noise = scenario_noise(s, seed);
        std::map<std::string, double> previous;
        for (double sup : e.supports) {
          const ImpactKernel k = rescaled_kernel(s.kernel, sup);
          const fs::path sub = fs::path(label) / ("eps_" + number_label(sup));
          if (e.run_particles)
            add(run_particles(s, s.model, k, noise, seed, s.particles.N, dir / sub / "particles", write),
                sub / "particles", base_alpha, sup);
          if (e.run_spde) add(run_spde(s, s.model, k, noise, seed, dir / sub / "spde", write), sub / "spde", base_alpha, sup);
          for (auto it = res.runs.end() - (e.run_particles + e.run_spde); it != res.runs.end(); ++it) {
            const double inc = max_window_increment(it->t, it->L, e.window);
            const std::string key = it->solver + "_" + label;
            if (!increasing.count(key)) increasing[key] = true;
            if (previous.count(it->solver) && !(inc > previous[it->solver])) increasing[key] = false;
            previous[it->solver] = inc;
            res.summary["max_increment_" + it->solver + "_" + label + "_eps_" + number_label(sup)] = inc;
            if (table) {
              table->field(static_cast<unsigned long long>(seed)).field(it->solver).field(sup).field(inc);
              table->field(it->L.back());
              table->end_row();
            }
          }
        }
      }
      for (const auto& [key, inc] : increasing) res.summary["strictly_increasing_" + key] = inc ? 1.0 : 0.0;
      break;
    }
    case ExperimentKind::NScaling: {
      std::optional<CsvWriter> table;
      if (write)
        table.emplace(dir / "comparison.csv",
                      std::vector<std::string>{"seed", "N", "t", "d0", "d1", "L_diff", "M_diff"});
      std::map<std::size_t, std::vector<double>> Ldiff, d1s, d0s;
      for (const auto& [label, seed] : seeds) {
        const NoisePath noise = scenario_noise(s, seed);
        SolverOutput ref = run_spde(s, s.model, s.kernel, noise, seed, dir / label / "spde", write);
        const DiscreteMeasure grid_measure = DiscreteMeasure::from_grid(ref.spde->final_grid);
        const double L_ref = ref.summary.L.back();
        const double M_ref = ref.summary.M.back();
        const double h = ref.spde->final_grid.dx;
        add(std::move(ref), fs::path(label) / "spde", base_alpha, s.kernel.support_end());
        for (std::size_t N : e.Ns) {
          const fs::path sub = fs::path(label) / ("N_" + std::to_string(N));
          SolverOutput p = run_particles(s, s.model, s.kernel, noise, seed, N, dir / sub / "particles", write, true);
          const DiscreteMeasure nu = particle_measure(p.particles->final_state);
          const ComparisonRow row{s.horizon, d0_distance(nu, grid_measure, h), d1_distance(nu, grid_measure, h),
                                  std::abs(p.summary.L.back() - L_ref), std::abs(p.summary.M.back() - M_ref)};
          Ldiff[N].push_back(row.L_diff);
          d1s[N].push_back(row.d1);
          d0s[N].push_back(row.d0);
          if (table) {
            table->field(static_cast<unsigned long long>(seed)).field(static_cast<unsigned long long>(N));
            table->field(row.t).field(row.d0).field(row.d1).field(row.L_diff).field(row.M_diff);
            table->end_row();
          }
          add(std::move(p), sub / "particles", base_alpha, s.kernel.support_end());
          drop_series(res.runs.back());
        }
      }
      auto mean = [](const std::vector<double>& v) {
        CompensatedSum a;
        for (double x : v) a.add(x);
        return a.value() / static_cast<double>(v.size());
      };
      std::vector<double> logN, logL, logD;
      bool d1_decreasing = true;
      double prev = std::numeric_limits<double>::infinity();
      std::optional<CsvWriter> scaling;
      if (write) scaling.emplace(dir / "scaling.csv", std::vector<std::string>{"N", "mean_L_diff", "mean_d1", "mean_d0"});
      for (std::size_t N : e.Ns) {
        const double mL = mean(Ldiff[N]), md1 = mean(d1s[N]), md0 = mean(d0s[N]);
        logN.push_back(std::log(static_cast<double>(N)));
        logL.push_back(std::log(mL));
        logD.push_back(std::log(md1));
        if (!(md1 < prev)) d1_decreasing = false;
        prev = md1;
        res.summary["mean_L_diff_N" + std::to_string(N)] = mL;
        res.summary["mean_d1_N" + std::to_string(N)] = md1;
        res.summary["mean_d0_N" + std::to_string(N)] = md0;
        if (scaling) {
          scaling->field(static_cast<unsigned long long>(N)).field(mL).field(md1).field(md0);
          scaling->end_row();
        }
      }
      res.summary["slope_L_diff"] = linear_fit(logN, logL).slope;
      res.summary["slope_d1"] = linear_fit(logN, logD).slope;
      res.summary["d1_strictly_decreasing"] = d1_decreasing ? 1.0 : 0.0;
      res.summary["seeds"] = static_cast<double>(seeds.size());
      break;
    }
    case ExperimentKind::Ensemble: {
      require(e.run_spde, ErrorKind::Validation, "experiment '" + e.name + "': ensembles run the SPDE solver");
      const auto seeds_e = experiment_seeds(s, e.paths);
      const auto times = snap_times(e.ensemble_times, s.spde.dt);
      std::vector<RunSummary> runs;
      const DensitySamples mean =
          ensemble_mean_density(s, seeds_e, times, e.ensemble_x_stride, {0.0, s.spde.x_max}, &runs);
      if (write) {
        fs::create_directories(dir);
        CsvWriter w(dir / "mean_density.csv", {"t", "x", "V"});
        for (std::size_t i = 0; i < mean.times.size(); ++i)
          for (std::size_t j = 0; j < mean.xs.size(); ++j) {
            w.field(mean.times[i]).field(mean.xs[j]).field(mean.at(i, j));
            w.end_row();
          }
        CsvWriter p(dir / "ensemble.csv", {"seed", "L_T", "clipped_mass", "max_mass_balance_error"});
        for (const auto& r : runs) {
          p.field(static_cast<unsigned long long>(r.seed)).field(r.L.empty() ? 0.0 : r.L.back());
          p.field(r.clipped_mass).field(r.max_mass_balance_error);
          p.end_row();
        }
      }
      for (auto& r : runs) {
        r.dir = (fs::path(e.name) / seed_dir(r.seed)).string();
        res.runs.push_back(std::move(r));
      }
      res.summary["paths"] = static_cast<double>(seeds_e.size());
      break;
    }
  }
  res.wall_seconds = seconds_since(start);
  return res;
}

void collect_files(const fs::path& root, const fs::path& dir, std::vector<fs::path>& out) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) collect_files(root, entry.path(), out);
    else if (entry.path().filename() != "manifest.json") out.push_back(fs::relative(entry.path(), root));
  }
}

Json run_json(const RunSummary& r) {
  return Json{{"dir", r.dir},          {"solver", r.solver},       {"seed", r.seed},
              {"alpha", r.alpha},      {"support", r.support},     {"N", r.N},
              {"noise_hash", hex64(r.noise_hash)}, {"wall_seconds", r.wall_seconds}, {"warnings", r.warnings}};
}

void write_manifest(const Scenario& s, const fs::path& out, const std::string& verb, const Json& runs) {
  Json m;
  m["manifest_version"] = 1;
  m["tool"] = "sysrisk";
  m["version"] = kVersion;
  m["verb"] = verb;
  m["seed"] = s.seed;
  m["threads"] = s.threads;
  m["scenario"] = s.source;
  if (!s.base_dir.empty()) m["scenario_dir"] = s.base_dir.string();
  m["experiments"] = runs;
  std::vector<fs::path> files;
  collect_files(out, out, files);
  std::sort(files.begin(), files.end());
  Json hashes = Json::object();
  for (const auto& f : files) hashes[f.generic_string()] = hex64(hash_file(out / f));
  m["outputs"] = hashes;
  std::ofstream o(out / "manifest.json");
  require(o.good(), ErrorKind::Io, "cannot write manifest in " + out.string());
  o << m.dump(2) << "\n";
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

std::uint64_t hash_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot read " + file.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double max_window_increment(const std::vector<double>& t, const std::vector<double>& L, double width) {
  double best = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (j + 1 < t.size() && t[j + 1] <= t[i] + width * (1.0 + 1e-12)) ++j;
    best = std::max(best, L[j] - L[i]);
  }
  return best;
}

NoisePath scenario_noise(const Scenario& s, std::uint64_t seed) { return make_noise_path(seed, s.noise.dt, s.horizon); }

void write_noise(const NoisePath& noise, const fs::path& file) {
  CsvWriter w(file, {"dt", "dW"});
  for (double dw : noise.increments) {
    w.field(noise.dt).field(dw);
    w.end_row();
  }
}

NoisePath read_noise(const fs::path& file) {
  const CsvTable t = read_csv(file);
  const std::size_t cdt = t.column("dt"), cdw = t.column("dW");
  require(!t.rows.empty(), ErrorKind::Io, file.string() + ": no increments");
  NoisePath n;
  n.dt = t.rows.front()[cdt];
  require(n.dt > 0.0, ErrorKind::Io, file.string() + ": dt must be positive");
  for (const auto& row : t.rows) {
    require(row[cdt] == n.dt, ErrorKind::Io, file.string() + ": dt must be constant");
    n.increments.push_back(row[cdw]);
  }
  return n;
}

std::uint64_t search_seed(const Scenario& s, const NoiseBand& band, std::uint64_t start) {
  for (std::uint64_t k = 0; k < s.noise.search_limit; ++k) {
    const std::uint64_t seed = start + k;
    if (band.contains(scenario_noise(s, seed))) return seed;
  }
  fail(ErrorKind::StatisticalPower,
       "no seed inside the noise band within " + std::to_string(s.noise.search_limit) + " candidates");
}

std::vector<std::uint64_t> experiment_seeds(const Scenario& s, std::size_t count) {
  std::vector<std::uint64_t> out;
  std::uint64_t next = s.seed;
  while (out.size() < count) {
    const std::uint64_t seed = s.noise.band.empty() ? next : search_seed(s, s.noise.band, next);
    out.push_back(seed);
    next = seed + 1;
  }
  return out;
}

RunSummary simulate_particles(const Scenario& s, const NoisePath& noise, const fs::path& out) {
  const auto start = Clock::now();
  SolverOutput o = run_particles(s, s.model, s.kernel, noise, s.seed, s.particles.N, out, true);
  o.summary.dir = ".";
  write_noise(noise, out / "noise.csv");
  write_manifest(s, out, "simulate-particles",
                 Json::array({Json{{"name", "simulate-particles"},
                                   {"wall_seconds", seconds_since(start)},
                                   {"runs", Json::array({run_json(o.summary)})}}}));
  return o.summary;
}

RunSummary solve_spde(const Scenario& s, const NoisePath& noise, const fs::path& out) {
  const auto start = Clock::now();
  SolverOutput o = run_spde(s, s.model, s.kernel, noise, s.seed, out, true);
  o.summary.dir = ".";
  write_noise(noise, out / "noise.csv");
  write_manifest(s, out, "solve-spde",
                 Json::array({Json{{"name", "solve-spde"},
                                   {"wall_seconds", seconds_since(start)},
                                   {"runs", Json::array({run_json(o.summary)})}}}));
  return o.summary;
}

std::vector<ExperimentResult> run_experiments(const Scenario& s, const fs::path& out, const RunOptions& options) {
  std::vector<ExperimentResult> results;
  Json manifest_runs = Json::array();
  for (const auto& e : s.experiments) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), e.name) == options.only.end())
      continue;
    try {
      results.push_back(run_one(s, e, out, options.write_outputs));
    } catch (const Error& err) {
      fail(err.kind(), "experiment '" + e.name + "': " + err.what());
    }
    const auto& r = results.back();
    Json runs = Json::array();
    for (const auto& run : r.runs) runs.push_back(run_json(run));
    manifest_runs.push_back(Json{{"name", r.name},
                                 {"kind", to_string(r.kind)},
                                 {"wall_seconds", r.wall_seconds},
                                 {"summary", r.summary},
                                 {"runs", runs}});
  }
  require(options.only.empty() || !results.empty(), ErrorKind::Validation, "no experiment matches the requested name");
  if (options.write_outputs) {
    fs::create_directories(out);
    write_manifest(s, out, "run", manifest_runs);
  }
  return results;
}

// ---------------------------------------------------------------------------
// compare

namespace {

std::map<std::string, fs::path> files_with_prefix(const fs::path& dir, const std::string& prefix) {
  std::map<std::string, fs::path> out;
  const std::regex re("^" + prefix + "_(.+)\\.csv$");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, re)) out[m[1]] = entry.path();
  }
  return out;
}

std::pair<double, double> observables_at(const CsvTable& obs, double t) {
  const std::size_t ct = obs.column("t"), cL = obs.column("L"), cM = obs.column("M");
  const std::vector<double>* best = nullptr;
  for (const auto& row : obs.rows)
    if (!best || std::abs(row[ct] - t) < std::abs((*best)[ct] - t)) best = &row;
  require(best != nullptr, ErrorKind::Io, "observables.csv has no rows");
  return {(*best)[cL], (*best)[cM]};
}

}  // namespace

std::vector<ComparisonRow> compare_runs(const fs::path& particles, const fs::path& spde, const fs::path& out) {
  const auto psnaps = files_with_prefix(particles, "particles");
  const auto gsnaps = files_with_prefix(spde, "density");
  const CsvTable pobs = read_csv(particles / "observables.csv");
  const CsvTable gobs = read_csv(spde / "observables.csv");
  std::vector<ComparisonRow> rows;
  for (const auto& [label, pfile] : psnaps) {
    auto it = gsnaps.find(label);
    if (it == gsnaps.end()) continue;
    const double t = std::stod(label);
    const CsvTable p = read_csv(pfile);
    const CsvTable g = read_csv(it->second);
    std::vector<double> px, pw, gx, gw;
    for (const auto& r : p.rows) {
      px.push_back(r[p.column("x")]);
      pw.push_back(r[p.column("weight")]);
    }
    require(g.rows.size() >= 2, ErrorKind::Io, it->second.string() + ": needs at least two cells");
    const double dx = g.rows[1][g.column("x")] - g.rows[0][g.column("x")];
    for (const auto& r : g.rows) {
      gx.push_back(r[g.column("x")]);
      gw.push_back(r[g.column("V")] * dx);
    }
    const DiscreteMeasure mu(std::move(px), std::move(pw));
    const DiscreteMeasure nu(std::move(gx), std::move(gw));
    const auto [Lp, Mp] = observables_at(pobs, t);
    const auto [Lg, Mg] = observables_at(gobs, t);
    rows.push_back({t, d0_distance(mu, nu, dx), d1_distance(mu, nu, dx), std::abs(Lp - Lg), std::abs(Mp - Mg)});
  }
  require(!rows.empty(), ErrorKind::Validation, "no matching snapshot times between " + particles.string() + " and " +
                                                    spde.string());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  if (!out.empty()) {
    CsvWriter w(out, {"t", "d0", "d1", "L_diff", "M_diff"});
    for (const auto& r : rows) {
      w.field(r.t).field(r.d0).field(r.d1).field(r.L_diff).field(r.M_diff);
      w.end_row();
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// validate

namespace {

double constant_of(const Coefficient& c, const std::string& name) {
  require(c.is_constant(), ErrorKind::Configuration, "this check needs a constant model." + name);
  return std::get<Coefficient::Constant>(c.form()).value;
}

const InitialLaw& single_gaussian(const Scenario& s) {
  require(s.initial.kind == InitialLaw::Kind::GaussianMixture && s.initial.means.size() == 1, ErrorKind::Configuration,
          "this check needs a single Gaussian initial law");
  return s.initial;
}

struct Pooled {
  std::vector<DiscreteMeasure> measures;
  std::vector<double> positions;
};

Pooled pooled_particles(const Scenario& s, double time) {
  const ValidationConfig& v = s.validation;
  Pooled out;
  Scenario local = s;
  local.horizon = static_cast<double>(std::llround(time / s.particles.dt)) * s.particles.dt;
  local.output = OutputConfig{};
  for (std::size_t k = 0; k < v.seeds; ++k) {
    const std::uint64_t seed = s.seed + k;
    const NoisePath noise = scenario_noise(local, seed);
    ParticleConfig cfg = particle_config(local, seed);
    const ParticleRun run = sysrisk::run(cfg, s.model, s.kernel, noise);
    out.measures.push_back(particle_measure(run.final_state));
    const auto& pts = out.measures.back().points();
    out.positions.insert(out.positions.end(), pts.begin(), pts.end());
  }
  return out;
}

}  // namespace

std::vector<CheckRow> validate(const Scenario& s, const fs::path& out) {
  const ValidationConfig& v = s.validation;
  std::vector<CheckRow> rows;
  auto row = [&](const std::string& check, const std::string& stat, double value, double threshold, bool passed) {
    rows.push_back({check, stat, value, threshold, passed});
  };
  std::optional<Pooled> pooled;
  auto get_pooled = [&]() -> const Pooled& {
    if (!pooled) pooled = pooled_particles(s, v.time);
    return *pooled;
  };

  for (const auto& check : v.checks) {
    if (check == "conservation") {
      const NoisePath noise = scenario_noise(s, s.seed);
      const SolverOutput p = run_particles(s, s.model, s.kernel, noise, s.seed, s.particles.N, {}, false);
      const SolverOutput g = run_spde(s, s.model, s.kernel, noise, s.seed, {}, false);
      row(check, "particles_max_mass_balance_error", p.summary.max_mass_balance_error, 1e-12,
          p.summary.max_mass_balance_error <= 1e-12);
      row(check, "particles_L_monotone", p.summary.L_monotone, 1, p.summary.L_monotone);
      row(check, "particles_Lfrak_monotone", p.summary.Lfrak_monotone, 1, p.summary.Lfrak_monotone);
      row(check, "spde_max_mass_balance_error", g.summary.max_mass_balance_error, 1e-8,
          g.summary.max_mass_balance_error <= 1e-8);
      row(check, "spde_L_monotone", g.summary.L_monotone, 1, g.summary.L_monotone);
      row(check, "spde_Lfrak_monotone", g.summary.Lfrak_monotone, 1, g.summary.Lfrak_monotone);
      row(check, "spde_clipped_mass", g.summary.clipped_mass, s.spde.max_clipped_mass,
          g.summary.clipped_mass <= s.spde.max_clipped_mass);
    } else if (check == "heat_kernel") {
      const InitialLaw& law = single_gaussian(s);
      require(constant_of(s.model.mu, "mu") == 0.0 && constant_of(s.model.alpha, "alpha") == 0.0 &&
                  constant_of(s.model.rho, "rho") == 0.0 && constant_of(s.model.pi, "pi") == 0.0,
              ErrorKind::Configuration, "heat_kernel check needs mu = pi = rho = alpha = 0");
      const double sigma = constant_of(s.model.sigma, "sigma");
      Scenario local = s;
      local.output = OutputConfig{};
      local.output.snapshot_times = snap_times(v.heat_kernel.times, s.spde.dt);
      local.horizon = *std::max_element(local.output.snapshot_times.begin(), local.output.snapshot_times.end());
      const NoisePath noise = scenario_noise(local, s.seed);
      const auto start = Clock::now();
      const SolverOutput g = run_spde(local, s.model, s.kernel, noise, s.seed, {}, false);
      const double secs = seconds_since(start);
      for (double t : local.output.snapshot_times) {
        double err = 0.0;
        for (const auto& snap : g.spde->snapshots) {
          if (!near_time(snap.t, t, s.spde.dt)) continue;
          for (std::size_t j = 0; j < snap.nx; ++j)
            err = std::max(err, std::abs(snap.values[j] -
                                         gaussian_absorbed_density(t, snap.center(j), law.means[0], law.sds[0], sigma)));
        }
        row(check, "linf_error_t" + time_label(t), err, v.heat_kernel.tolerance, err <= v.heat_kernel.tolerance);
      }
      if (v.heat_kernel.max_seconds > 0.0)
        row(check, "runtime_seconds", secs, v.heat_kernel.max_seconds, secs <= v.heat_kernel.max_seconds);
    } else if (check == "first_passage") {
      require(constant_of(s.model.alpha, "alpha") == 0.0 && constant_of(s.model.rho, "rho") == 0.0 &&
                  constant_of(s.model.pi, "pi") == 0.0,
              ErrorKind::Configuration, "first_passage check needs pi = rho = alpha = 0");
      const double b = constant_of(s.model.mu, "mu");
      const double sigma = constant_of(s.model.sigma, "sigma");
      auto oracle = [&](double t) {
        if (s.initial.kind == InitialLaw::Kind::PointMass) return first_passage_loss(s.initial.point, b, sigma, t);
        const InitialLaw& law = single_gaussian(s);
        return first_passage_loss_gaussian(law.means[0], law.sds[0], b, sigma, t);
      };
      const NoisePath noise = scenario_noise(s, s.seed);
      const auto start = Clock::now();
      std::optional<SolverOutput> g;
      if (s.initial.has_density()) g = run_spde(s, s.model, s.kernel, noise, s.seed, {}, false);
      const SolverOutput p = run_particles(s, s.model, s.kernel, noise, s.seed, v.first_passage_N, {}, false);
      const double secs = seconds_since(start);
      auto at = [](const RunSummary& r, double t) {
        std::size_t best = 0;
        for (std::size_t k = 0; k < r.t.size(); ++k)
          if (std::abs(r.t[k] - t) < std::abs(r.t[best] - t)) best = k;
        return r.L[best];
      };
      for (double t : v.first_passage.times) {
        const double o = oracle(t);
        if (g) {
          const double err = std::abs(at(g->summary, t) - o);
          row(check, "spde_abs_error_t" + time_label(t), err, v.first_passage.tolerance, err <= v.first_passage.tolerance);
        }
        const double se = std::sqrt(std::max(o * (1.0 - o), 1e-300) / static_cast<double>(v.first_passage_N));
        const double z = std::abs(at(p.summary, t) - o) / se;
        row(check, "particles_abs_z_t" + time_label(t), z, v.first_passage.se_multiple, z <= v.first_passage.se_multiple);
      }
      if (v.first_passage.max_seconds > 0.0)
        row(check, "runtime_seconds", secs, v.first_passage.max_seconds, secs <= v.first_passage.max_seconds);
    } else if (check == "boundary_decay") {
      const Pooled& pool = get_pooled();
      std::vector<std::pair<double, double>> series;
      for (double eps : v.boundary_eps) {
        CompensatedSum acc;
        for (const auto& m : pool.measures) acc.add(boundary_mass(m, eps));
        series.emplace_back(eps, acc.value() / static_cast<double>(pool.measures.size()));
      }
      const DecayFit fit = decay_exponent_fit(series, DecayModel::PowerLaw);
      row(check, "power_law_exponent", fit.exponent, v.boundary_min_exponent, fit.exponent >= v.boundary_min_exponent);
      row(check, "power_law_r2", fit.r2, 0.0, true);
    } else if (check == "gaussian_tail") {
      const Pooled& pool = get_pooled();
      std::vector<double> sorted = pool.positions;
      std::sort(sorted.begin(), sorted.end());
      require(sorted.size() >= 1000, ErrorKind::StatisticalPower, "gaussian_tail needs at least 1000 pooled particles");
      const double n = static_cast<double>(sorted.size());
      const double q_lo = 0.5, q_hi = 1.0 - 100.0 / n;
      std::vector<std::pair<double, double>> series;
      for (std::size_t k = 0; k < v.tail_levels; ++k) {
        const double q = q_lo + (q_hi - q_lo) * static_cast<double>(k) / static_cast<double>(v.tail_levels - 1);
        const double lambda = sorted[static_cast<std::size_t>(q * (n - 1.0))];
        CompensatedSum acc;
        for (const auto& m : pool.measures) acc.add(tail_mass(m, lambda));
        series.emplace_back(lambda, acc.value() / static_cast<double>(pool.measures.size()));
      }
      const DecayFit fit = decay_exponent_fit(series, DecayModel::GaussianTail);
      row(check, "lambda2_slope", fit.slope, 0.0, fit.slope < 0.0);
      row(check, "lambda2_r2", fit.r2, v.tail_min_r2, fit.r2 >= v.tail_min_r2);
    } else if (check == "subgaussian") {
      const Pooled& pool = get_pooled();
      const double eta = subgaussian_eta(v.time, v.subgaussian_C_b, v.subgaussian_C_sigma, v.subgaussian_eps);
      const TailReport rep = subgaussian_tail_check(pool.positions, eta, v.eta_frac);
      row(check, "eta_t", eta, 0.0, true);
      row(check, "doubling_ratio", rep.doubling_ratio, 1.25, rep.doubling_ratio >= 0.8 && rep.doubling_ratio <= 1.25);
      row(check, "lambda2_slope", rep.tail_slope, 0.0, rep.tail_slope < 0.0);
    } else if (check == "aronson") {
      std::vector<double> times;
      for (std::size_t i = 0; i < v.bound_nt; ++i)
        times.push_back(v.bound_t.first + (v.bound_t.second - v.bound_t.first) * static_cast<double>(i) /
                                              static_cast<double>(std::max<std::size_t>(1, v.bound_nt - 1)));
      times = snap_times(times, s.spde.dt);
      Scenario local = s;
      local.horizon = std::max(s.horizon, times.back());
      const auto seeds = experiment_seeds(local, v.bound_paths);
      const DensitySamples mean = ensemble_mean_density(local, seeds, times, v.bound_x_stride, v.bound_x, nullptr);
      const DensityGrid g0 = init_density(s.initial, s.spde.x_max, s.spde.nx, s.spde.truncation_budget);
      const BoundReport rep = aronson_bound_check(mean, DiscreteMeasure::from_grid(g0), v.bound, v.bound_mode);
      row(check, "admissible_C", rep.passed ? rep.admissible_C : std::numeric_limits<double>::infinity(), 1e6,
          rep.passed);
      row(check, "max_ratio_at_C1", rep.max_ratio, 0.0, true);
      row(check, "argmax_t", rep.argmax_t, 0.0, true);
      row(check, "argmax_x", rep.argmax_x, 0.0, true);
      row(check, "violations_at_largest_C", static_cast<double>(rep.passed ? 0 : rep.violations), 0.0, rep.passed);
    }
  }
  if (!out.empty()) {
    CsvWriter w(out, {"check", "statistic", "value", "threshold", "passed"});
    for (const auto& r : rows) {
      w.field(r.check).field(r.statistic).field(r.value).field(r.threshold);
      w.field(static_cast<unsigned long long>(r.passed ? 1 : 0));
      w.end_row();
    }
  }
  return rows;
}

}  // namespace sysrisk
