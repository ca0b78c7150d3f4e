#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "measures.hpp"

namespace sysrisk {

// Standard normal CDF through erfc.
double normal_cdf(double x) noexcept;

// G_t(x, y) = p_t(x - y) - p_t(x + y), p_t the N(0, t) density.
double dirichlet_heat_kernel(double t, double x, double y);

// Density at time t of Brownian motion (volatility sigma) absorbed at 0,
// started from N(mean, sd^2) restricted to the half-line: the initial law
// convolved against the Dirichlet heat kernel, in closed form.
double gaussian_absorbed_density(double t, double x, double mean, double sd, double sigma = 1.0);

// P(inf_{s<=t} (x0 + b s + sigma W_s) <= 0).
double first_passage_loss(double x0, double b, double sigma, double t);

// First-passage loss averaged over a Gaussian initial law N(mean, sd^2) on (0, inf).
double first_passage_loss_gaussian(double mean, double sd, double b, double sigma, double t);

struct BoundParams {
  double C = 1.0;
  double c = 4.0;
  double kappa = 0.9;
  double eps = 0.1;
  double c_xy = 0.0;  // coefficient of |x - y| min(x, y); zero for separable sigma
};

enum class BoundMode { HalfLine, WholeSpace };

// Right side of the density bound with C = 1, integrated against nu0.
double aronson_rhs(double t, double x, const DiscreteMeasure& nu0, const BoundParams& params, BoundMode mode);

struct DensitySamples {
  std::vector<double> times;
  std::vector<double> xs;
  std::vector<double> values;  // row-major [time][x]
  std::size_t paths = 0;       // number of independent paths averaged

  double at(std::size_t i, std::size_t j) const { return values[i * xs.size() + j]; }
};

struct BoundReport {
  bool passed = false;
  double admissible_C = std::numeric_limits<double>::quiet_NaN();
  double max_ratio = 0.0;       // max of density / rhs(C = 1)
  double argmax_t = 0.0;
  double argmax_x = 0.0;
  std::size_t violations = 0;   // at the largest C of the search grid when none passes
};

// Searches C over a log grid 1e-2 .. 1e6 (10 points per decade) at fixed
// (c, kappa, eps); passes when some C leaves no sample above C * rhs.
BoundReport aronson_bound_check(const DensitySamples& density, const DiscreteMeasure& nu0, const BoundParams& params,
                                BoundMode mode, std::size_t min_paths = 100);

// eta_t = 5 C_b eps / (10 C_b e^{10 C_b t} + 4 C_sigma^2 eps (e^{10 C_b t} - 1)).
double subgaussian_eta(double t, double C_b, double C_sigma, double eps);

struct TailReport {
  bool passed = false;
  double moment_full = 0.0;
  double moment_half = 0.0;
  double doubling_ratio = 0.0;  // moment_full / moment_half
  double tail_slope = 0.0;      // d log P(X > lambda) / d lambda^2
  double tail_r2 = 0.0;
};

// Checks E exp(eta * eta_frac * X^2) is stable when the sample is doubled
// (ratio in [0.8, 1.25]) and that log P(X > lambda) decreases in lambda^2.
TailReport subgaussian_tail_check(std::span<const double> samples, double eta, double eta_frac = 0.5,
                                  std::size_t min_samples = 10000);

}  // namespace sysrisk
