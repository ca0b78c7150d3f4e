#pragma once

#include <cstddef>
#include <vector>

namespace sysrisk {

enum class KernelShape { IsoscelesTriangle, PiecewiseLinear };

struct KernelKnot {
  double time;
  double value;
};

// Unit-mass latency kernel with compact support [0, support_end], zero at
// both ends, piecewise linear between knots. Immutable after construction.
class ImpactKernel {
 public:
  static ImpactKernel triangle(double support_end);
  static ImpactKernel piecewise_linear(std::vector<KernelKnot> knots);

  KernelShape shape() const noexcept { return shape_; }
  double support_end() const noexcept { return knots_.back().time; }
  const std::vector<KernelKnot>& knots() const noexcept { return knots_; }

  double density(double u) const noexcept;
  // Weak derivative; right-continuous at interior knots, 0 outside the support.
  double derivative(double u) const noexcept;
  // Antiderivative from 0: equals 1 for u >= support_end.
  double cumulative(double u) const noexcept;

  double max_density() const noexcept;
  double derivative_l1() const noexcept;

 private:
  ImpactKernel(KernelShape shape, std::vector<KernelKnot> knots);
  std::size_t segment(double u) const noexcept;

  KernelShape shape_;
  std::vector<KernelKnot> knots_;
  std::vector<double> cumulative_at_knot_;
};

// Right-continuous piecewise-constant loss: L_s = values[k] for
// s in [k dt, (k + 1) dt). The last value extends over its cell, so the path
// determines the smoothed loss up to horizon() = size() * dt.
class LossPath {
 public:
  explicit LossPath(double dt);

  void append(double value);

  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double back() const noexcept { return values_.back(); }
  double horizon() const noexcept { return dt_ * static_cast<double>(values_.size()); }
  double value_at(double t) const;

 private:
  double dt_;
  std::vector<double> values_;
};

// (K * L)_t, exact for the piecewise-constant path. Cost is O(support/dt).
double convolve_loss(const ImpactKernel& kernel, const LossPath& loss, double t);

// (K' * L)_t = sum of loss jumps weighted by K(t - jump time).
double loss_smoothing_rate(const ImpactKernel& kernel, const LossPath& loss, double t);

}  // namespace sysrisk
