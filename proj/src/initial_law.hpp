#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"

namespace sysrisk {

struct InitialLaw {
  enum class Kind { PointMass, GaussianMixture, Empirical };

  Kind kind = Kind::PointMass;
  double point = 1.0;
  std::vector<double> means;
  std::vector<double> sds;
  std::vector<double> weights;  // normalized on construction
  std::vector<double> samples;  // Empirical
  std::string source;           // Empirical file, for diagnostics

  static InitialLaw point_mass(double x0);
  static InitialLaw gaussian(double mean, double sd);
  static InitialLaw mixture(std::vector<double> means, std::vector<double> sds, std::vector<double> weights);
  static InitialLaw empirical(std::vector<double> samples, std::string source = {});

  bool has_density() const noexcept { return kind == Kind::GaussianMixture; }
  // Mixture density / CDF on the whole line (no truncation at 0).
  double pdf(double x) const;
  double cdf(double x) const;

  // One untruncated draw; attempt indexes the counter so redraws are reproducible.
  double draw(const CounterRng& rng, std::uint64_t stream, std::uint64_t attempt) const;
};

}  // namespace sysrisk
