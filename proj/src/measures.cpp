#include "measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace sysrisk {

DiscreteMeasure::DiscreteMeasure(std::vector<double> points, std::vector<double> weights) {
  require(points.size() == weights.size(), ErrorKind::InvalidParameter, "measure points and weights differ in length");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  points_.reserve(points.size());
  weights_.reserve(points.size());
  for (std::size_t i : order) {
    require(std::isfinite(points[i]), ErrorKind::InvalidParameter, "measure points must be finite");
    require(weights[i] >= 0.0, ErrorKind::InvalidParameter, "measure weights must be nonnegative");
    points_.push_back(points[i]);
    weights_.push_back(weights[i]);
  }
  require(total_mass() <= 1.0 + 1e-12, ErrorKind::InvalidParameter, "measure mass exceeds 1");
}

DiscreteMeasure DiscreteMeasure::from_grid(const DensityGrid& grid) {
  std::vector<double> pts(grid.nx), w(grid.nx);
  for (std::size_t j = 0; j < grid.nx; ++j) {
    pts[j] = grid.center(j);
    w[j] = std::max(0.0, grid.values[j]) * grid.dx;
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure DiscreteMeasure::dirac(double x, double mass) { return DiscreteMeasure({x}, {mass}); }

double DiscreteMeasure::total_mass() const noexcept {
  CompensatedSum m;
  for (double w : weights_) m.add(w);
  return m.value();
}

namespace {

struct Vertex {
  double x;
  double y;
};

// Concave piecewise-linear function given by its vertices (sorted by x).
using Pwl = std::vector<Vertex>;

void restrict_domain(Pwl& f, double lo, double hi) {
  auto value_at = [&](double x) {
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (x <= f[i].x) {
        const double span = f[i].x - f[i - 1].x;
        if (span <= 0.0) return f[i].y;
        return f[i - 1].y + (f[i].y - f[i - 1].y) * (x - f[i - 1].x) / span;
      }
    }
    return f.back().y;
  };
  if (f.front().x >= lo && f.back().x <= hi) return;
  Pwl out;
  out.reserve(f.size() + 2);
  const double a = std::max(lo, f.front().x);
  const double b = std::min(hi, f.back().x);
  out.push_back({a, value_at(a)});
  for (const auto& v : f)
    if (v.x > a && v.x < b) out.push_back(v);
  if (b > a) out.push_back({b, value_at(b)});
  f.swap(out);
}

}  // namespace

double chain_lp_max(std::span<const double> w, std::span<const double> bound, double step) {
  require(w.size() == bound.size() && !w.empty(), ErrorKind::InvalidParameter, "chain LP size mismatch");
  require(step > 0.0, ErrorKind::InvalidParameter, "grid step must be positive");
  Pwl f{{-bound[0], -w[0] * bound[0]}, {bound[0], w[0] * bound[0]}};
  Pwl next;
  for (std::size_t j = 1; j < w.size(); ++j) {
    // sup-convolution with the indicator of [-step, step]: split at the argmax.
    std::size_t peak = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
      if (f[i].y > f[peak].y) peak = i;
    next.clear();
    next.reserve(f.size() + 3);
    for (std::size_t i = 0; i <= peak; ++i) next.push_back({f[i].x - step, f[i].y});
    for (std::size_t i = peak; i < f.size(); ++i) next.push_back({f[i].x + step, f[i].y});
    f.swap(next);
    for (auto& v : f) v.y += w[j] * v.x;
    restrict_domain(f, -bound[j], bound[j]);
  }
  double best = f.front().y;
  for (const auto& v : f) best = std::max(best, v.y);
  return best;
}

namespace {

double flat_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double h, bool pinned_at_zero) {
  require(h > 0.0 && std::isfinite(h), ErrorKind::InvalidParameter, "grid step must be positive");
  if (mu.empty() && nu.empty()) return 0.0;
  for (const auto* m : {&mu, &nu})
    if (!m->empty())
      require(m->points().front() >= 0.0, ErrorKind::Domain, "distances need measures supported in [0, x_max]");
  const double x_max = std::max(mu.max_point(), nu.max_point());
  const auto nodes = static_cast<std::size_t>(std::ceil(x_max / h)) + 2;
  std::vector<double> w(nodes, 0.0);
  auto deposit = [&](const DiscreteMeasure& m, double sign) {
    for (std::size_t i = 0; i < m.points().size(); ++i) {
      const double pos = m.points()[i] / h;
      const auto j = std::min(nodes - 2, static_cast<std::size_t>(std::floor(pos)));
      const double frac = pos - static_cast<double>(j);
      w[j] += sign * m.weights()[i] * (1.0 - frac);
      w[j + 1] += sign * m.weights()[i] * frac;
    }
  };
  deposit(mu, 1.0);
  deposit(nu, -1.0);
  std::vector<double> bound(nodes, 1.0);
  if (pinned_at_zero)
    for (std::size_t j = 0; j < nodes; ++j) bound[j] = 1.0 + static_cast<double>(j) * h;
  return std::max(0.0, chain_lp_max(w, bound, h));
}

}  // namespace

double d1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double grid_step) {
  return flat_distance(mu, nu, grid_step, false);
}

double d0_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double grid_step) {
  return flat_distance(mu, nu, grid_step, true);
}

double tail_mass(const DiscreteMeasure& mu, double lambda) {
  require(lambda >= 0.0, ErrorKind::InvalidParameter, "lambda must be nonnegative");
  CompensatedSum m;
  const auto& p = mu.points();
  for (auto it = std::upper_bound(p.begin(), p.end(), lambda); it != p.end(); ++it)
    m.add(mu.weights()[static_cast<std::size_t>(it - p.begin())]);
  return m.value();
}

double boundary_mass(const DiscreteMeasure& mu, double eps) {
  require(eps >= 0.0, ErrorKind::InvalidParameter, "eps must be nonnegative");
  CompensatedSum m;
  const auto& p = mu.points();
  for (std::size_t i = 0; i < p.size() && p[i] < eps; ++i)
    if (p[i] > 0.0) m.add(mu.weights()[i]);
  return m.value();
}

namespace {

// Integral of the cell-constant grid density over (a, b).
double grid_integral(const DensityGrid& g, double a, double b) {
  a = std::max(a, 0.0);
  b = std::min(b, g.x_max);
  if (b <= a) return 0.0;
  CompensatedSum m;
  const auto j0 = static_cast<std::size_t>(std::floor(a / g.dx));
  for (std::size_t j = j0; j < g.nx; ++j) {
    const double lo = static_cast<double>(j) * g.dx;
    const double hi = lo + g.dx;
    if (lo >= b) break;
    const double overlap = std::min(hi, b) - std::max(lo, a);
    if (overlap > 0.0) m.add(g.values[j] * overlap);
  }
  return m.value();
}

}  // namespace

double tail_mass(const DensityGrid& grid, double lambda) {
  require(lambda >= 0.0, ErrorKind::InvalidParameter, "lambda must be nonnegative");
  return grid_integral(grid, lambda, grid.x_max);
}

double boundary_mass(const DensityGrid& grid, double eps) {
  require(eps >= 0.0, ErrorKind::InvalidParameter, "eps must be nonnegative");
  return grid_integral(grid, 0.0, eps);
}

DecayFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::InsufficientData, "fit abscissae are all equal");
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = x.size();
  return fit;
}

DecayFit decay_exponent_fit(std::span<const std::pair<double, double>> series, DecayModel model) {
  std::vector<double> xs, ys;
  for (const auto& [s, mass] : series) {
    if (!(mass > 0.0) || !std::isfinite(mass)) continue;
    if (model == DecayModel::PowerLaw && !(s > 0.0)) continue;
    xs.push_back(model == DecayModel::PowerLaw ? std::log(s) : s * s);
    ys.push_back(std::log(mass));
  }
  require(xs.size() >= 4, ErrorKind::InsufficientData,
          "decay fit needs at least 4 points with positive mass, got " + std::to_string(xs.size()));
  DecayFit fit = linear_fit(xs, ys);
  fit.exponent = model == DecayModel::PowerLaw ? fit.slope : -fit.slope;
  return fit;
}

}  // namespace sysrisk
