#include "initial_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "error.hpp"

namespace sysrisk {

InitialLaw InitialLaw::point_mass(double x0) {
  require(std::isfinite(x0), ErrorKind::Configuration, "point mass location must be finite");
  InitialLaw law;
  law.kind = Kind::PointMass;
  law.point = x0;
  return law;
}

InitialLaw InitialLaw::gaussian(double mean, double sd) { return mixture({mean}, {sd}, {1.0}); }

InitialLaw InitialLaw::mixture(std::vector<double> means, std::vector<double> sds, std::vector<double> weights) {
  require(!means.empty() && means.size() == sds.size() && means.size() == weights.size(), ErrorKind::Configuration,
          "mixture needs matching means, sds and weights");
  double total = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    require(std::isfinite(means[i]), ErrorKind::Configuration, "mixture mean must be finite");
    require(sds[i] > 0.0, ErrorKind::Configuration, "mixture sd must be positive");
    require(weights[i] > 0.0, ErrorKind::Configuration, "mixture weights must be positive");
    total += weights[i];
  }
  for (auto& w : weights) w /= total;
  InitialLaw law;
  law.kind = Kind::GaussianMixture;
  law.means = std::move(means);
  law.sds = std::move(sds);
  law.weights = std::move(weights);
  return law;
}

InitialLaw InitialLaw::empirical(std::vector<double> samples, std::string source) {
  require(!samples.empty(), ErrorKind::Configuration, "empirical initial law needs samples");
  for (double s : samples) require(std::isfinite(s), ErrorKind::Configuration, "empirical samples must be finite");
  InitialLaw law;
  law.kind = Kind::Empirical;
  law.samples = std::move(samples);
  law.source = std::move(source);
  return law;
}

double InitialLaw::pdf(double x) const {
  require(kind == Kind::GaussianMixture, ErrorKind::Configuration, "initial law has no density");
  double p = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double z = (x - means[i]) / sds[i];
    p += weights[i] * std::exp(-0.5 * z * z) / (sds[i] * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

double InitialLaw::cdf(double x) const {
  require(kind == Kind::GaussianMixture, ErrorKind::Configuration, "initial law has no density");
  double c = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i)
    c += weights[i] * 0.5 * std::erfc(-(x - means[i]) / (sds[i] * std::numbers::sqrt2));
  return c;
}

double InitialLaw::draw(const CounterRng& rng, std::uint64_t stream, std::uint64_t attempt) const {
  const std::uint64_t counter = kInitCounterBase + 2 * attempt;
  switch (kind) {
    case Kind::PointMass:
      return point;
    case Kind::Empirical: {
      const double u = rng.uniforms(stream, counter)[0];
      const auto idx = std::min(samples.size() - 1, static_cast<std::size_t>(u * static_cast<double>(samples.size())));
      return samples[idx];
    }
    case Kind::GaussianMixture: {
      std::size_t comp = 0;
      if (means.size() > 1) {
        double u = rng.uniforms(stream, counter + 1)[0];
        while (comp + 1 < means.size() && u >= weights[comp]) u -= weights[comp++];
      }
      return means[comp] + sds[comp] * rng.normal(stream, counter);
    }
  }
  return point;
}

}  // namespace sysrisk
