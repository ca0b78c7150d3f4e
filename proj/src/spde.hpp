#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "initial_law.hpp"
#include "kernels.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sysrisk {

// Cell-averaged density on [0, x_max]; cell j is centered at (j + 1/2) dx.
struct DensityGrid {
  double x_max = 5.0;
  std::size_t nx = 1000;
  double dx = 5e-3;
  double t = 0.0;
  std::vector<double> values;

  DensityGrid() = default;
  DensityGrid(double x_max_, std::size_t nx_);

  double center(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * dx; }
  double mass() const noexcept;
  double mean() const noexcept;  // <V, Id>, unnormalized
};

struct SpdeConfig {
  double x_max = 5.0;
  std::size_t nx = 1000;
  double dt = 1e-4;
  double horizon = 1.0;
  std::vector<double> snapshot_times;
  std::size_t snapshot_stride = 0;       // additionally keep every n-th step when > 0
  double clip_tolerance = 1e-8;          // per-cell negative density limit
  double max_clipped_mass = 1e-5;        // cumulative budget
  double truncation_budget = 1e-6;       // initial mass outside (0, x_max)
  double cfl = 0.9;
};

struct SpdeState {
  DensityGrid grid;
  Observables obs;
  LossPath loss;
  std::size_t step = 0;
  CompensatedSum loss_sum;   // L accumulated from boundary outflow
  double clipped_mass = 0.0; // cumulative mass moved by clipping
  double max_negative = 0.0; // most negative value seen before clipping

  // Per-step work arrays, reused across steps.
  std::vector<double> sigma_cell, lower, diag, upper, flux, face_shift, slope;

  SpdeState(DensityGrid g, double dt);
};

struct SpdeRunRecord {
  std::vector<double> t;
  std::vector<double> L;
  std::vector<double> M;
  std::vector<double> Lfrak;
  std::vector<double> Lfrak_rate;
  std::vector<double> flux0;
  std::vector<double> mass_balance_error;  // |mass(V) + L - 1|
  std::vector<double> clipped_cumulative;
  std::vector<DensityGrid> snapshots;
  std::vector<std::string> warnings;
  DensityGrid final_grid;
  double wall_seconds = 0.0;
};

// Cell averages of the initial density; mass outside (0, x_max) is truncated
// and must not exceed truncation_budget.
DensityGrid init_density(const InitialLaw& law, double x_max, std::size_t nx, double truncation_budget = 1e-6);

// Second-order one-sided estimate of dV/dx at 0 using V(0) = 0.
double boundary_flux(const DensityGrid& grid);

// Operator-split step: implicit idiosyncratic diffusion, upwind
// deterministic/contagion transport, positivity-preserving common-noise
// translation, then clipping of round-off negatives.
void spde_step(SpdeState& state, const ModelCoefficients& coeffs, const ImpactKernel& kernel, double dW0,
               double dt, const SpdeConfig& cfg);

SpdeRunRecord solve(const DensityGrid& initial, const ModelCoefficients& coeffs, const ImpactKernel& kernel,
                    const NoisePath& noise, const SpdeConfig& cfg);

// Mass of the whole-space Gaussian envelope beyond x_max at the horizon; used
// for the right-boundary tail-budget warning.
double gaussian_tail_envelope(const InitialLaw& law, double sigma_max, double drift_bound, double horizon,
                              double x_max);

}  // namespace sysrisk
