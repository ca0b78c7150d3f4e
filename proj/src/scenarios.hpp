#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kernels.hpp"
#include "model.hpp"
#include "oracles.hpp"
#include "particles.hpp"
#include "spde.hpp"

namespace sysrisk {

using Json = nlohmann::json;

using Interval = std::pair<double, double>;

// Constraints on a common-noise path; each present interval must contain the
// corresponding statistic of W^0 over [0, T].
struct NoiseBand {
  std::optional<Interval> endpoint;
  std::optional<Interval> running_min;
  std::optional<Interval> running_max;

  bool empty() const noexcept { return !endpoint && !running_min && !running_max; }
  bool contains(const NoisePath& noise) const;
};

struct NoiseRegime {
  std::string name;
  std::uint64_t seed = 0;
  NoiseBand band;
};

struct NoiseConfig {
  double dt = 1e-4;
  NoiseBand band;                   // seeds outside the band are skipped by multi-seed experiments
  std::vector<NoiseRegime> regimes; // pinned seeds for prescribed paths
  std::uint64_t search_limit = 100000;
};

enum class ExperimentKind { Single, PairedAlpha, KernelSweep, NScaling, Ensemble };

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::Single;
  std::vector<double> alphas;     // PairedAlpha
  std::vector<double> supports;   // KernelSweep
  std::vector<std::size_t> Ns;    // NScaling
  std::size_t paths = 0;          // Ensemble
  std::size_t seeds = 1;          // number of noise seeds
  bool run_particles = true;
  bool run_spde = true;
  bool use_regimes = false;       // one run per pinned noise regime instead of scanned seeds
  double window = 0.01;           // KernelSweep loss-increment window
  std::vector<double> ensemble_times;
  std::size_t ensemble_x_stride = 1;
};

struct OutputConfig {
  std::vector<double> snapshot_times;
  std::size_t heatgrid_stride = 0;    // steps between heat-grid rows; 0 disables heatgrid.csv
  std::size_t heatgrid_x_stride = 1;
  bool dump_paths = false;
  double observables_every = 0.0;     // time between observables.csv rows; 0 writes every step
};

struct AnalyticCheck {
  std::vector<double> times;
  double tolerance = 0.0;
  double se_multiple = 3.0;  // particle agreement band in standard errors
  double max_seconds = 0.0;  // 0 = unbounded
};

struct ValidationConfig {
  std::vector<std::string> checks;
  // Pooled particle statistics
  std::size_t seeds = 50;
  double time = 0.5;
  std::vector<double> boundary_eps{0.1, 0.05, 0.025, 0.0125};
  double boundary_min_exponent = 1.05;
  double tail_min_r2 = 0.9;
  std::size_t tail_levels = 12;
  double subgaussian_C_b = 1.0;
  double subgaussian_C_sigma = 1.0;
  double subgaussian_eps = 0.1;
  double eta_frac = 0.5;
  // Density bound
  BoundParams bound;
  BoundMode bound_mode = BoundMode::HalfLine;
  Interval bound_t{0.05, 1.0};
  Interval bound_x{0.0, 5.0};
  std::size_t bound_nt = 20;
  std::size_t bound_x_stride = 5;
  std::size_t bound_paths = 200;
  // Analytic comparisons
  AnalyticCheck heat_kernel;
  AnalyticCheck first_passage;
  std::size_t first_passage_N = 100000;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  double horizon = 1.0;
  ModelCoefficients model;
  ImpactKernel kernel = ImpactKernel::triangle(0.015);
  InitialLaw initial = InitialLaw::point_mass(1.0);
  ParticleConfig particles;
  SpdeConfig spde;
  NoiseConfig noise;
  std::vector<ExperimentConfig> experiments;
  OutputConfig output;
  ValidationConfig validation;
  unsigned threads = 1;

  Json source;  // the parsed document, echoed into manifests
  std::filesystem::path origin;
  std::filesystem::path base_dir;  // resolves relative file references
};

// Parses a scenario document (JSON, comments allowed). A manifest written by
// run_experiment is accepted too: its "scenario" member is loaded.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const Json& doc, const std::filesystem::path& origin = {});

// Applies command-line overrides and keeps the echoed source in sync.
void override_seed(Scenario& s, std::uint64_t seed);
void override_threads(Scenario& s, unsigned threads);

// Particle / SPDE configs with the scenario-level horizon, seed and outputs applied.
ParticleConfig particle_config(const Scenario& s, std::uint64_t seed);
SpdeConfig spde_config(const Scenario& s);
ModelCoefficients with_alpha(const ModelCoefficients& m, double alpha);

const char* to_string(ExperimentKind kind) noexcept;

}  // namespace sysrisk
