#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "measures.hpp"
#include "oracles.hpp"

using namespace sysrisk;

namespace {

// Enumerates every lattice point; exact when bounds and step are lattice multiples.
double brute_force_lp(const std::vector<double>& w, const std::vector<double>& bound, double step, double lattice) {
  const std::size_t n = w.size();
  std::vector<std::vector<double>> values(n);
  for (std::size_t j = 0; j < n; ++j)
    for (double v = -bound[j]; v <= bound[j] + 1e-12; v += lattice) values[j].push_back(v);
  std::vector<std::size_t> idx(n, 0);
  double best = -1e300;
  for (;;) {
    bool ok = true;
    double val = 0.0;
    for (std::size_t j = 0; j < n && ok; ++j) {
      const double p = values[j][idx[j]];
      if (j > 0 && std::abs(p - values[j - 1][idx[j - 1]]) > step + 1e-12) ok = false;
      val += w[j] * p;
    }
    if (ok) best = std::max(best, val);
    std::size_t j = 0;
    while (j < n && ++idx[j] == values[j].size()) idx[j++] = 0;
    if (j == n) break;
  }
  return best;
}

DiscreteMeasure random_measure(std::mt19937_64& g, std::size_t atoms, double x_max, double mass) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> p(atoms), w(atoms);
  double total = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    p[i] = x_max * U(g);
    w[i] = U(g);
    total += w[i];
  }
  for (auto& v : w) v *= mass / total;
  return DiscreteMeasure(p, w);
}

}  // namespace

TEST_CASE("chain LP agrees with lattice enumeration") {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> B(3, 6);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + trial % 3;
    std::vector<double> w(n), bound(n);
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = U(g);
      bound[j] = 0.25 * B(g);
    }
    CHECK(chain_lp_max(w, bound, 0.25) == doctest::Approx(brute_force_lp(w, bound, 0.25, 0.25)).epsilon(1e-12));
  }
}

TEST_CASE("distances between Dirac masses") {
  const double h = 0.01;
  for (auto [x, y] : {std::pair{0.5, 1.0}, std::pair{0.0, 1.5}, std::pair{1.0, 3.0}, std::pair{0.2, 4.7}}) {
    const auto a = DiscreteMeasure::dirac(x), b = DiscreteMeasure::dirac(y);
    CHECK(d1_distance(a, b, h) == doctest::Approx(std::min(std::abs(x - y), 2.0)).epsilon(1e-9));
    CHECK(d0_distance(a, b, h) == doctest::Approx(std::abs(x - y)).epsilon(1e-9));
    CHECK(d1_distance(a, a, h) == 0.0);
    CHECK(d0_distance(b, b, h) == 0.0);
  }
  const DiscreteMeasure zero;
  const auto m = DiscreteMeasure::dirac(1.3, 0.4);
  CHECK(d1_distance(m, zero, h) == doctest::Approx(0.4));
}

TEST_CASE("metric properties on random measures") {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_measure(g, 30, 4.0, 1.0);
    const auto b = random_measure(g, 25, 4.0, 0.8);
    const auto c = random_measure(g, 20, 4.0, 0.9);
    const double h = 0.02;
    const double ab = d1_distance(a, b, h), bc = d1_distance(b, c, h), ac = d1_distance(a, c, h);
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(ab == doctest::Approx(d1_distance(b, a, h)).epsilon(1e-12));
    CHECK(ab <= d0_distance(a, b, h) + 1e-12);
    CHECK(ab >= 0.0);
    // Halving the grid enlarges the feasible set.
    CHECK(d1_distance(a, b, h / 2) >= ab - 1e-12);
    CHECK(d0_distance(a, b, h / 2) >= d0_distance(a, b, h) - 1e-12);
  }
}

TEST_CASE("grid densities convert to measures") {
  DensityGrid grid(2.0, 200);
  for (std::size_t j = 0; j < grid.nx; ++j) grid.values[j] = 0.5;
  const auto mu = DiscreteMeasure::from_grid(grid);
  CHECK(mu.total_mass() == doctest::Approx(1.0));
  CHECK(tail_mass(mu, 0.0) == doctest::Approx(1.0));
  CHECK(tail_mass(mu, 5.0) == 0.0);
  CHECK(tail_mass(grid, 1.0) == doctest::Approx(0.5));
  CHECK(boundary_mass(grid, 0.1) == doctest::Approx(0.05));
  CHECK(boundary_mass(mu, 0.1) == doctest::Approx(0.05));
  CHECK_THROWS_AS(DiscreteMeasure({1.0, 0.5}, {0.1}), Error);
}

TEST_CASE("heat-kernel boundary mass scales quadratically") {
  const double t = 0.25;
  DensityGrid grid(5.0, 20000);
  for (std::size_t j = 0; j < grid.nx; ++j) grid.values[j] = dirichlet_heat_kernel(t, grid.center(j), 1.0);
  const double h = 1e-6;
  const double slope = (dirichlet_heat_kernel(t, h, 1.0) - dirichlet_heat_kernel(t, 0.0, 1.0)) / h;
  std::vector<std::pair<double, double>> series;
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const double m = boundary_mass(grid, eps);
    CHECK(m / (eps * eps) == doctest::Approx(0.5 * slope).epsilon(0.1));
    series.emplace_back(eps, m);
  }
  const DecayFit fit = decay_exponent_fit(series, DecayModel::PowerLaw);
  CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("decay fits recover synthetic exponents") {
  std::vector<std::pair<double, double>> power, gauss;
  for (double s : {0.1, 0.2, 0.4, 0.8, 1.6}) {
    power.emplace_back(s, s * s);
    gauss.emplace_back(s, std::exp(-3.0 * s * s));
  }
  const DecayFit p = decay_exponent_fit(power, DecayModel::PowerLaw);
  CHECK(std::abs(p.exponent - 2.0) < 1e-6);
  CHECK(p.r2 == doctest::Approx(1.0));
  const DecayFit q = decay_exponent_fit(gauss, DecayModel::GaussianTail);
  CHECK(std::abs(q.exponent - 3.0) < 1e-6);
  power.resize(3);
  CHECK_THROWS_AS(decay_exponent_fit(power, DecayModel::PowerLaw), Error);
  std::vector<std::pair<double, double>> bad{{0.1, 1.0}, {0.2, 0.0}, {0.3, 1.0}, {0.4, 1.0}};
  CHECK_THROWS_AS(decay_exponent_fit(bad, DecayModel::PowerLaw), Error);
}
