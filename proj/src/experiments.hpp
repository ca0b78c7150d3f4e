#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "measures.hpp"
#include "scenarios.hpp"

namespace sysrisk {

inline constexpr const char* kVersion = "0.4.0";

// Per-run digest kept in memory for callers that evaluate criteria directly.
struct RunSummary {
  std::string dir;     // relative to the experiment output root
  std::string solver;  // "particles" or "spde"
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double support = 0.0;
  std::size_t N = 0;
  std::uint64_t noise_hash = 0;
  double wall_seconds = 0.0;

  std::vector<double> t, L, Lfrak, M;
  double max_mass_balance_error = 0.0;
  double clipped_mass = 0.0;
  bool L_monotone = true;
  bool Lfrak_monotone = true;
  double first_default_time = -1.0;  // < 0 when no default
  std::vector<std::string> warnings;
};

struct ExperimentResult {
  std::string name;
  ExperimentKind kind = ExperimentKind::Single;
  std::vector<RunSummary> runs;
  std::map<std::string, double> summary;  // experiment-level statistics
  double wall_seconds = 0.0;
};

struct RunOptions {
  std::vector<std::string> only;  // experiment names; empty runs all
  bool write_outputs = true;
};

// Executes the scenario's experiments under out/<experiment name>/ and writes
// out/manifest.json. The manifest can be loaded back as a scenario.
std::vector<ExperimentResult> run_experiments(const Scenario& s, const std::filesystem::path& out,
                                              const RunOptions& options = {});

// Single-solver runs with the scenario's own alpha and seed.
RunSummary simulate_particles(const Scenario& s, const NoisePath& noise, const std::filesystem::path& out);
RunSummary solve_spde(const Scenario& s, const NoisePath& noise, const std::filesystem::path& out);

NoisePath scenario_noise(const Scenario& s, std::uint64_t seed);
NoisePath read_noise(const std::filesystem::path& file);
void write_noise(const NoisePath& noise, const std::filesystem::path& file);

// First seed >= start whose noise path lies in the band.
std::uint64_t search_seed(const Scenario& s, const NoiseBand& band, std::uint64_t start);
// Noise seeds used by multi-seed experiments: consecutive seeds from s.seed
// filtered by noise.band.
std::vector<std::uint64_t> experiment_seeds(const Scenario& s, std::size_t count);

struct ComparisonRow {
  double t = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;
  double L_diff = 0.0;
  double M_diff = 0.0;
};

// Per-snapshot distances between a particle run directory and an SPDE run
// directory; writes comparison.csv when out is nonempty.
std::vector<ComparisonRow> compare_runs(const std::filesystem::path& particles, const std::filesystem::path& spde,
                                        const std::filesystem::path& out);

struct CheckRow {
  std::string check;
  std::string statistic;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

// Runs the checks listed in the scenario's validation section; writes
// report.csv when out is nonempty.
std::vector<CheckRow> validate(const Scenario& s, const std::filesystem::path& out);

// Largest increase of L over any window of the given width.
double max_window_increment(const std::vector<double>& t, const std::vector<double>& L, double width);

std::uint64_t hash_file(const std::filesystem::path& file);
std::string hex64(std::uint64_t v);
std::string time_label(double t);

}  // namespace sysrisk
