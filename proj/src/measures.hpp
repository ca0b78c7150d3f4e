#pragma once

#include <span>
#include <utility>
#include <vector>

#include "spde.hpp"

namespace sysrisk {

// Sub-probability measure with finitely many atoms, sorted by location.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<double> points, std::vector<double> weights);

  static DiscreteMeasure from_grid(const DensityGrid& grid);
  static DiscreteMeasure dirac(double x, double mass = 1.0);

  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  bool empty() const noexcept { return points_.empty(); }
  double total_mass() const noexcept;
  double max_point() const noexcept { return points_.empty() ? 0.0 : points_.back(); }

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

// sup <mu - nu, psi> over psi piecewise linear on the grid {j h} with
// |psi_{j+1} - psi_j| <= h and |psi_j| <= 1 (d1) or |psi_j| <= 1 + x_j (d0).
// Solved exactly as a chain LP; nondecreasing under grid halving.
double d1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double grid_step);
double d0_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double grid_step);

// Exact maximizer value of sum w_j psi_j subject to |psi_j| <= bound_j and
// |psi_{j+1} - psi_j| <= step. Exposed for testing against brute force.
double chain_lp_max(std::span<const double> w, std::span<const double> bound, double step);

double tail_mass(const DiscreteMeasure& mu, double lambda);
double boundary_mass(const DiscreteMeasure& mu, double eps);
double tail_mass(const DensityGrid& grid, double lambda);
double boundary_mass(const DensityGrid& grid, double eps);

enum class DecayModel { PowerLaw, GaussianTail };

struct DecayFit {
  double slope = 0.0;      // d log(mass) / d log(s) or d log(mass) / d s^2
  double intercept = 0.0;
  double r2 = 0.0;
  double exponent = 0.0;   // slope for PowerLaw, -slope for GaussianTail
  std::size_t points = 0;
};

DecayFit decay_exponent_fit(std::span<const std::pair<double, double>> series, DecayModel model);

// Ordinary least squares y = a + b x with R^2.
DecayFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace sysrisk
