#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "initial_law.hpp"
#include "kernels.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sysrisk {

// a(x) = clamp(intercept + slope * x); must stay within [lower, upper] with lower > 0.
struct WeightFunction {
  double intercept = 1.0;
  double slope = 0.0;
  double lower = 1e-9;
  double upper = std::numeric_limits<double>::infinity();

  double operator()(double x) const noexcept { return intercept + slope * x; }
};

struct ParticleHooks {
  bool zero_idiosyncratic_noise = false;
  bool allow_degenerate_sigma = false;
};

struct ParticleConfig {
  std::size_t N = 1000;
  double horizon = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  InitialLaw initial = InitialLaw::point_mass(1.0);
  WeightFunction weights;
  bool bridge_correction = true;
  unsigned threads = 1;
  ParticleHooks hooks;

  std::vector<double> snapshot_times;
  double histogram_bin = 0.05;
  bool dump_paths = false;
  std::size_t path_stride = 10;
  std::size_t path_particles = 100;
};

struct ParticleState {
  double t = 0.0;
  std::size_t step = 0;
  double dt = 0.0;
  std::vector<double> x;
  std::vector<std::uint8_t> alive;
  std::vector<double> default_time;  // NaN while alive
  std::vector<double> weights;       // a_i^N, sum to 1
  Observables obs;
  LossPath loss;
  CompensatedSum loss_sum;
  double alive_mass = 1.0;
  std::size_t alive_count = 0;

  explicit ParticleState(double dt_) : dt(dt_), loss(dt_) {}
};

struct Histogram {
  double bin_width = 0.0;
  std::vector<double> density;  // bin j covers [j w, (j + 1) w)

  double total_mass() const noexcept;
};

struct ParticleTrajectory {
  std::vector<double> t;
  std::vector<Observables> obs;
  std::vector<std::size_t> alive_count;
  std::vector<double> mass_balance_error;  // |sum alive a + L - 1|
  std::vector<double> step_seconds;
};

struct ParticleSnapshot {
  double t = 0.0;
  std::vector<double> x;       // alive positions
  std::vector<double> weight;  // matching a_i^N
  Histogram histogram;
};

struct PathSample {
  double t;
  std::size_t particle;
  double x;
  bool alive;
};

struct ParticleRun {
  ParticleTrajectory trajectory;
  ParticleState final_state;
  std::vector<ParticleSnapshot> snapshots;
  std::vector<PathSample> paths;
};

ParticleState init_system(const ParticleConfig& cfg);

// One explicit Euler-Maruyama step with absorption. dW0 is the common-noise
// increment over [t, t + dt]. Contagion uses the exact smoothed-loss
// increment over the step, determined by losses through the current step.
void step(ParticleState& state, const ParticleConfig& cfg, const ModelCoefficients& coeffs,
          const ImpactKernel& kernel, double dW0, const CounterRng& rng);

ParticleRun run(const ParticleConfig& cfg, const ModelCoefficients& coeffs, const ImpactKernel& kernel,
                const NoisePath& noise);

// Weighted histogram of alive particles on [0, x_max]; mass beyond x_max is
// folded into the last bin so the total equals the alive mass. x_max <= 0
// selects the smallest multiple of bin_width covering every particle.
Histogram empirical_density(const ParticleState& state, double bin_width, double x_max = 0.0);

}  // namespace sysrisk
