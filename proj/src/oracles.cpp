#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace sysrisk {

namespace {

double gaussian_pdf(double x, double variance) {
  return std::exp(-0.5 * x * x / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

}  // namespace

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double dirichlet_heat_kernel(double t, double x, double y) {
  require(t > 0.0, ErrorKind::Domain, "heat kernel needs t > 0");
  require(x >= 0.0 && y >= 0.0, ErrorKind::Domain, "heat kernel is posed on the half-line");
  return gaussian_pdf(x - y, t) - gaussian_pdf(x + y, t);
}

double gaussian_absorbed_density(double t, double x, double mean, double sd, double sigma) {
  require(t >= 0.0 && sd > 0.0 && sigma > 0.0, ErrorKind::Domain, "invalid absorbed-density parameters");
  // The reflected image makes the restriction to (0, inf) exact: mass of
  // N(mean, sd^2) below 0 cancels against the image.
  const double var = sd * sd + sigma * sigma * t;
  return gaussian_pdf(x - mean, var) - gaussian_pdf(x + mean, var);
}

double first_passage_loss(double x0, double b, double sigma, double t) {
  require(x0 > 0.0 && sigma > 0.0 && t >= 0.0, ErrorKind::Domain, "first-passage loss needs x0 > 0, sigma > 0, t >= 0");
  if (t == 0.0) return 0.0;
  const double s = sigma * std::sqrt(t);
  const double direct = normal_cdf((-x0 - b * t) / s);
  const double exponent = -2.0 * b * x0 / (sigma * sigma);
  const double image = normal_cdf((-x0 + b * t) / s);
  if (image == 0.0) return direct;
  return std::min(1.0, direct + std::exp(exponent + std::log(image)));
}

double first_passage_loss_gaussian(double mean, double sd, double b, double sigma, double t) {
  require(sd > 0.0, ErrorKind::Domain, "sd must be positive");
  // Composite Simpson on [max(0, mean - 12 sd), mean + 12 sd] for the
  // surviving part, plus the initial mass at or below 0 counted as lost.
  const double lo = std::max(0.0, mean - 12.0 * sd);
  const double hi = mean + 12.0 * sd;
  const std::size_t n = 4000;
  const double h = (hi - lo) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double y = lo + h * static_cast<double>(i);
    const double weight = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double f = y > 0.0 ? first_passage_loss(y, b, sigma, t) : 1.0;
    acc += weight * f * gaussian_pdf(y - mean, sd * sd);
  }
  return acc * h / 3.0 + normal_cdf(-mean / sd);
}

double aronson_rhs(double t, double x, const DiscreteMeasure& nu0, const BoundParams& p, BoundMode mode) {
  require(t > 0.0, ErrorKind::Domain, "bound needs t > 0");
  const double sqrt_t = std::sqrt(t);
  double acc = 0.0;
  for (std::size_t i = 0; i < nu0.points().size(); ++i) {
    const double y = nu0.points()[i];
    const double w = nu0.weights()[i];
    if (w == 0.0) continue;
    const double gauss_growth = std::exp(p.eps * y * y);
    if (mode == BoundMode::WholeSpace) {
      acc += w * (1.0 / sqrt_t + gauss_growth) * std::exp(-(x - y) * (x - y) / (p.c * t));
      continue;
    }
    const double boundary = (1.0 / sqrt_t) * std::min(x / sqrt_t, 1.0) * std::min(y / sqrt_t, 1.0);
    const double power = std::min(std::pow(x, p.kappa) * std::pow(y, p.kappa) / std::pow(t, p.kappa), 1.0);
    const double offdiag =
        std::min(1.0, std::exp(-(x - y) * (x - y) / (p.c * t) + p.c_xy * std::abs(x - y) * std::min(x, y)));
    acc += w * (boundary + power * gauss_growth) * offdiag;
  }
  return acc;
}

BoundReport aronson_bound_check(const DensitySamples& density, const DiscreteMeasure& nu0, const BoundParams& params,
                                BoundMode mode, std::size_t min_paths) {
  require(density.paths >= min_paths, ErrorKind::StatisticalPower,
          "density estimate averages " + std::to_string(density.paths) + " paths, need at least " +
              std::to_string(min_paths));
  require(density.values.size() == density.times.size() * density.xs.size(), ErrorKind::InvalidParameter,
          "density sample grid is not rectangular");
  BoundReport report;
  std::vector<double> ratios;
  ratios.reserve(density.values.size());
  for (std::size_t i = 0; i < density.times.size(); ++i) {
    for (std::size_t j = 0; j < density.xs.size(); ++j) {
      const double v = density.at(i, j);
      if (v <= 0.0) continue;
      const double rhs = aronson_rhs(density.times[i], density.xs[j], nu0, params, mode);
      const double ratio = rhs > 0.0 ? v / rhs : std::numeric_limits<double>::infinity();
      ratios.push_back(ratio);
      if (ratio > report.max_ratio) {
        report.max_ratio = ratio;
        report.argmax_t = density.times[i];
        report.argmax_x = density.xs[j];
      }
    }
  }
  for (int k = -20; k <= 60; ++k) {
    const double C = std::pow(10.0, static_cast<double>(k) / 10.0);
    const auto violations =
        static_cast<std::size_t>(std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r > C; }));
    report.violations = violations;
    if (violations == 0) {
      report.passed = true;
      report.admissible_C = C;
      break;
    }
  }
  return report;
}

double subgaussian_eta(double t, double C_b, double C_sigma, double eps) {
  require(C_b > 0.0 && C_sigma > 0.0 && eps > 0.0, ErrorKind::InvalidParameter, "eta needs positive constants");
  const double g = std::exp(10.0 * C_b * t);
  return 5.0 * C_b * eps / (10.0 * C_b * g + 4.0 * C_sigma * C_sigma * eps * (g - 1.0));
}

TailReport subgaussian_tail_check(std::span<const double> samples, double eta, double eta_frac,
                                  std::size_t min_samples) {
  require(samples.size() >= min_samples, ErrorKind::StatisticalPower,
          "tail check needs at least " + std::to_string(min_samples) + " samples, got " +
              std::to_string(samples.size()));
  const double a = eta * eta_frac;
  const std::size_t half = samples.size() / 2;
  // Log-sum-exp keeps heavy-tailed samples from overflowing.
  auto log_mean_exp = [&](std::size_t n) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, a * samples[i] * samples[i]);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(a * samples[i] * samples[i] - hi);
    return hi + std::log(acc / static_cast<double>(n));
  };
  const double log_full = log_mean_exp(samples.size());
  const double log_half = log_mean_exp(half);
  TailReport r;
  r.moment_full = std::exp(log_full);
  r.moment_half = std::exp(log_half);
  r.doubling_ratio = std::exp(log_full - log_half);

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Upper quantile levels from the median out to where ~50 samples remain.
  std::vector<std::pair<double, double>> series;
  const double q_lo = 0.5;
  const double q_hi = 1.0 - 50.0 / n;
  for (int k = 0; k < 12 && q_hi > q_lo; ++k) {
    const double q = q_lo + (q_hi - q_lo) * k / 11.0;
    const double lambda = sorted[static_cast<std::size_t>(q * (n - 1))];
    if (lambda <= 0.0) continue;
    const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), lambda));
    series.emplace_back(lambda, above / n);
  }
  if (series.size() >= 4) {
    const DecayFit fit = decay_exponent_fit(series, DecayModel::GaussianTail);
    r.tail_slope = fit.slope;
    r.tail_r2 = fit.r2;
  }
  r.passed = std::isfinite(r.doubling_ratio) && r.doubling_ratio >= 0.8 && r.doubling_ratio <= 1.25 &&
             r.tail_slope < 0.0;
  return r;
}

}  // namespace sysrisk
