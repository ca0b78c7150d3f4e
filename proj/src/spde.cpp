#include "spde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace sysrisk {

DensityGrid::DensityGrid(double x_max_, std::size_t nx_) : x_max(x_max_), nx(nx_) {
  require(x_max_ > 0.0 && std::isfinite(x_max_), ErrorKind::Configuration, "spde.x_max must be positive");
  require(nx_ >= 3, ErrorKind::Configuration, "spde.nx must be at least 3");
  dx = x_max / static_cast<double>(nx);
  values.assign(nx, 0.0);
}

double DensityGrid::mass() const noexcept {
  CompensatedSum m;
  for (double v : values) m.add(v);
  return m.value() * dx;
}

double DensityGrid::mean() const noexcept {
  CompensatedSum m;
  for (std::size_t j = 0; j < nx; ++j) m.add(values[j] * center(j));
  return m.value() * dx;
}

SpdeState::SpdeState(DensityGrid g, double dt) : grid(std::move(g)), loss(dt) {}

DensityGrid init_density(const InitialLaw& law, double x_max, std::size_t nx, double truncation_budget) {
  if (!law.has_density())
    fail(ErrorKind::Configuration,
         "the SPDE needs an initial law with an L2 density; replace point masses or empirical samples with a "
         "narrow Gaussian (initial_law.type = \"gaussian\")");
  DensityGrid grid(x_max, nx);
  double prev = law.cdf(0.0);
  const double below = prev;
  for (std::size_t j = 0; j < nx; ++j) {
    const double next = law.cdf(static_cast<double>(j + 1) * grid.dx);
    grid.values[j] = std::max(0.0, next - prev) / grid.dx;
    prev = next;
  }
  const double truncated = below + (1.0 - prev);
  if (truncated > truncation_budget) {
    std::ostringstream msg;
    msg << "initial mass outside (0, " << x_max << ") is " << truncated << " > " << truncation_budget
        << "; enlarge spde.x_max or move the initial law away from 0";
    fail(ErrorKind::Domain, msg.str());
  }
  return grid;
}

double boundary_flux(const DensityGrid& grid) {
  require(grid.nx >= 3, ErrorKind::Domain, "boundary flux needs at least 3 cells");
  return (9.0 * grid.values[0] - grid.values[1]) / (3.0 * grid.dx);
}

namespace {

void tridiagonal_solve(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                       std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

void spde_step(SpdeState& s, const ModelCoefficients& coeffs, const ImpactKernel& kernel, double dW0, double dt,
               const SpdeConfig& cfg) {
  DensityGrid& g = s.grid;
  auto& V = g.values;
  const std::size_t n = g.nx;
  const double dx = g.dx;
  const double t = g.t;
  const double t_next = static_cast<double>(s.step + 1) * dt;
  const Observables obs = s.obs;

  const double lfrak_next = convolve_loss(kernel, s.loss, t_next);
  const double d_lfrak = lfrak_next - obs.Lfrak;

  s.sigma_cell.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.sigma_cell[j] = coeffs.volatility(t, g.center(j));

  const double rho = coeffs.correlation(t, obs);
  const double idio = 1.0 - rho * rho;

  // (1) implicit diffusion of 1/2 (1 - rho^2) d_xx(sigma^2 V); the common-noise
  // share of the diffusion is produced by the translation in (3). Ghost
  // sigma^2 V = -(sigma^2 V)_0 at the Dirichlet end, zero flux at x_max.
  s.lower.assign(n, 0.0);
  s.diag.assign(n, 1.0);
  s.upper.assign(n, 0.0);
  const double r = idio * dt / (2.0 * dx * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const double sj = s.sigma_cell[j] * s.sigma_cell[j];
    if (j == 0)
      s.diag[j] += 3.0 * r * sj;
    else if (j + 1 == n)
      s.diag[j] += r * sj;
    else
      s.diag[j] += 2.0 * r * sj;
    if (j > 0) s.lower[j] = -r * s.sigma_cell[j - 1] * s.sigma_cell[j - 1];
    if (j + 1 < n) s.upper[j] = -r * s.sigma_cell[j + 1] * s.sigma_cell[j + 1];
  }
  tridiagonal_solve(s.lower, s.diag, s.upper, V);
  double outflow = idio * dt * s.sigma_cell[0] * s.sigma_cell[0] * V[0] / dx;

  // (2) deterministic drift, contagion and the Ito-Stratonovich drift
  // correction 1/2 rho^2 sigma sigma' as first-order upwind transport.
  const bool sigma_varies = coeffs.sigma.depends_on(CoefficientArg::X);
  auto sigma_slope = [&](double x) {
    const double h = 1e-6 * std::max(1.0, x);
    return (coeffs.volatility(t, x + h) - coeffs.volatility(t, std::max(0.0, x - h))) / (x + h - std::max(0.0, x - h));
  };
  s.flux.assign(n + 1, 0.0);
  double max_shift = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    const double xf = static_cast<double>(f) * dx;
    double shift = coeffs.drift(t, xf, obs) * dt;
    if (d_lfrak != 0.0) shift -= coeffs.contagion(t, xf, obs) * d_lfrak;
    if (sigma_varies && rho != 0.0) shift -= 0.5 * rho * rho * coeffs.volatility(t, xf) * sigma_slope(xf) * dt;
    max_shift = std::max(max_shift, std::abs(shift));
    s.flux[f] = shift > 0.0 ? (f == 0 ? 0.0 : shift * V[f - 1]) : shift * V[f];
  }
  if (max_shift > cfg.cfl * dx) {
    std::ostringstream msg;
    msg << "advective CFL violated at step " << s.step << ": max |shift| = " << max_shift << " > " << cfg.cfl
        << " dx = " << cfg.cfl * dx << "; reduce spde.dt";
    fail(ErrorKind::StepSize, msg.str());
  }
  if (max_shift > 0.0) {
    outflow -= s.flux[0];
    for (std::size_t j = 0; j < n; ++j) V[j] -= (s.flux[j + 1] - s.flux[j]) / dx;
  }

  // (3) common-noise translation by rho sigma dW0 (Stratonovich flow, with the
  // second-order displacement term for x-dependent sigma). Conservative remap
  // of a minmod-limited piecewise-linear reconstruction; the reconstruction is
  // nonnegative, so the step preserves positivity. Sub-steps keep each
  // displacement within one cell.
  if (rho != 0.0 && dW0 != 0.0) {
    s.face_shift.resize(n + 1);
    double max_c = 0.0;
    for (std::size_t f = 0; f <= n; ++f) {
      const double xf = static_cast<double>(f) * dx;
      const double sig = f == 0 ? coeffs.volatility(t, 0.0) : (f == n ? s.sigma_cell[n - 1] : coeffs.volatility(t, xf));
      double c = rho * sig * dW0;
      if (sigma_varies) c += 0.5 * rho * rho * sig * sigma_slope(xf) * dW0 * dW0;
      s.face_shift[f] = c;
      max_c = std::max(max_c, std::abs(c));
    }
    s.face_shift[n] = 0.0;  // closed far end
    const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(max_c / dx)));
    s.slope.resize(n);
    for (std::size_t it = 0; it < sub; ++it) {
      for (std::size_t j = 0; j < n; ++j) {
        const double left = j == 0 ? -V[0] : V[j - 1];
        const double right = j + 1 == n ? V[j] : V[j + 1];
        const double a = V[j] - left, b = right - V[j];
        s.slope[j] = a * b <= 0.0 ? 0.0 : (std::abs(a) < std::abs(b) ? a : b) / dx;
      }
      for (std::size_t f = 0; f <= n; ++f) {
        const double c = s.face_shift[f] / static_cast<double>(sub);
        if (c > 0.0) {
          // Mass swept rightwards out of cell f-1; nothing enters from x < 0.
          s.flux[f] = f == 0 ? 0.0 : c * (V[f - 1] + 0.5 * s.slope[f - 1] * (dx - c));
        } else if (c < 0.0) {
          s.flux[f] = f == n ? 0.0 : c * (V[f] - 0.5 * s.slope[f] * (dx + c));
        } else {
          s.flux[f] = 0.0;
        }
      }
      outflow -= s.flux[0];
      for (std::size_t j = 0; j < n; ++j) V[j] -= (s.flux[j + 1] - s.flux[j]) / dx;
    }
  }

  // (4) clip round-off negatives, returning the mass from nearby cells.
  for (std::size_t j = 0; j < n; ++j) {
    if (V[j] >= 0.0) continue;
    s.max_negative = std::min(s.max_negative, V[j]);
    if (V[j] < -cfg.clip_tolerance) {
      std::ostringstream msg;
      msg << "negative density " << V[j] << " in cell " << j << " at step " << s.step
          << " exceeds the clip tolerance; reduce spde.dt";
      fail(ErrorKind::SchemeInstability, msg.str());
    }
    const double deficit = -V[j];
    V[j] = 0.0;
    const std::size_t lo = j >= 5 ? j - 5 : 0;
    const std::size_t hi = std::min(n - 1, j + 5);
    double pool = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) pool += std::max(0.0, V[k]);
    if (pool > 0.0) {
      const double keep = std::max(0.0, 1.0 - deficit / pool);
      for (std::size_t k = lo; k <= hi; ++k)
        if (V[k] > 0.0) V[k] *= keep;
    }
    s.clipped_mass += deficit * dx;
  }

  s.loss_sum.add(std::max(0.0, outflow));
  s.step += 1;
  g.t = t_next;
  s.obs.L = std::min(1.0, s.loss_sum.value());
  s.obs.M = g.mean();
  s.loss.append(s.obs.L);
  s.obs.Lfrak = convolve_loss(kernel, s.loss, t_next);
  s.obs.Lfrak_rate = loss_smoothing_rate(kernel, s.loss, t_next);
}

double gaussian_tail_envelope(const InitialLaw& law, double sigma_max, double drift_bound, double horizon,
                              double x_max) {
  if (!law.has_density()) return 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < law.means.size(); ++i) {
    const double sd = std::sqrt(law.sds[i] * law.sds[i] + sigma_max * sigma_max * horizon);
    const double mean = law.means[i] + drift_bound * horizon;
    tail += law.weights[i] * 0.5 * std::erfc((x_max - mean) / (sd * std::numbers::sqrt2));
  }
  return tail;
}

SpdeRunRecord solve(const DensityGrid& initial, const ModelCoefficients& coeffs, const ImpactKernel& kernel,
                    const NoisePath& noise, const SpdeConfig& cfg) {
  coeffs.check_signatures();
  const auto wall_start = std::chrono::steady_clock::now();
  const std::size_t m = coarsening_factor(noise, cfg.dt);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  require(steps > 0 && std::abs(static_cast<double>(steps) * cfg.dt - cfg.horizon) <= 1e-9 * cfg.horizon,
          ErrorKind::Configuration, "spde horizon must be a positive integer multiple of spde.dt");
  require(steps * m <= noise.increments.size(), ErrorKind::Configuration,
          "noise path horizon is shorter than the SPDE horizon");

  SpdeState s(initial, cfg.dt);
  s.grid.t = 0.0;
  const double initial_loss = std::clamp(1.0 - s.grid.mass(), 0.0, 1.0);
  s.loss_sum.add(initial_loss);
  s.obs.L = initial_loss;
  s.obs.M = s.grid.mean();
  s.loss.append(initial_loss);
  s.obs.Lfrak = convolve_loss(kernel, s.loss, 0.0);
  s.obs.Lfrak_rate = 0.0;

  SpdeRunRecord rec;
  auto record = [&] {
    rec.t.push_back(s.grid.t);
    rec.L.push_back(s.obs.L);
    rec.M.push_back(s.obs.M);
    rec.Lfrak.push_back(s.obs.Lfrak);
    rec.Lfrak_rate.push_back(s.obs.Lfrak_rate);
    rec.flux0.push_back(boundary_flux(s.grid));
    rec.mass_balance_error.push_back(std::abs(s.grid.mass() + s.obs.L - 1.0));
    rec.clipped_cumulative.push_back(s.clipped_mass);
    bool keep = cfg.snapshot_stride > 0 && s.step % cfg.snapshot_stride == 0;
    for (double ts : cfg.snapshot_times)
      if (std::abs(ts - s.grid.t) <= 0.5 * cfg.dt * (1.0 + 1e-9)) keep = true;
    if (keep) rec.snapshots.push_back(s.grid);
  };

  record();
  for (std::size_t k = 0; k < steps; ++k) {
    spde_step(s, coeffs, kernel, coarse_increment(noise, m, k), cfg.dt, cfg);
    record();
  }
  if (s.clipped_mass > cfg.max_clipped_mass) {
    std::ostringstream msg;
    msg << "cumulative clipped mass " << s.clipped_mass << " exceeds budget " << cfg.max_clipped_mass;
    rec.warnings.push_back(msg.str());
  }
  rec.final_grid = s.grid;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return rec;
}

}  // namespace sysrisk
