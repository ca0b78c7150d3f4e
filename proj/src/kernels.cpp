#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace sysrisk {

ImpactKernel::ImpactKernel(KernelShape shape, std::vector<KernelKnot> knots)
    : shape_(shape), knots_(std::move(knots)) {
  cumulative_at_knot_.assign(knots_.size(), 0.0);
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const double width = knots_[i].time - knots_[i - 1].time;
    cumulative_at_knot_[i] = cumulative_at_knot_[i - 1] + 0.5 * width * (knots_[i].value + knots_[i - 1].value);
  }
}

ImpactKernel ImpactKernel::triangle(double support_end) {
  require(support_end > 0.0 && std::isfinite(support_end), ErrorKind::InvalidParameter,
          "kernel support_end must be positive");
  return ImpactKernel(KernelShape::IsoscelesTriangle,
                      {{0.0, 0.0}, {0.5 * support_end, 2.0 / support_end}, {support_end, 0.0}});
}

ImpactKernel ImpactKernel::piecewise_linear(std::vector<KernelKnot> knots) {
  require(knots.size() >= 3, ErrorKind::InvalidParameter, "piecewise-linear kernel needs at least 3 knots");
  require(knots.front().time == 0.0, ErrorKind::InvalidParameter, "first kernel knot must be at time 0");
  require(knots.front().value == 0.0 && knots.back().value == 0.0, ErrorKind::InvalidParameter,
          "kernel must vanish at both ends of its support (zero trace)");
  double mass = 0.0;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    require(std::isfinite(knots[i].time) && std::isfinite(knots[i].value), ErrorKind::InvalidParameter,
            "kernel knots must be finite");
    require(knots[i].value >= 0.0, ErrorKind::InvalidParameter, "kernel values must be nonnegative");
    if (i > 0) {
      require(knots[i].time > knots[i - 1].time, ErrorKind::InvalidParameter,
              "kernel knot times must be strictly increasing");
      mass += 0.5 * (knots[i].time - knots[i - 1].time) * (knots[i].value + knots[i - 1].value);
    }
  }
  if (std::abs(mass - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "kernel must have unit mass, got " << mass;
    fail(ErrorKind::InvalidParameter, msg.str());
  }
  return ImpactKernel(KernelShape::PiecewiseLinear, std::move(knots));
}

std::size_t ImpactKernel::segment(double u) const noexcept {
  // Index i with knots[i].time <= u < knots[i+1].time; caller ensures u in support.
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), u,
                                   [](double value, const KernelKnot& k) { return value < k.time; });
  const auto idx = static_cast<std::size_t>(it - knots_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, knots_.size() - 2);
}

double ImpactKernel::density(double u) const noexcept {
  if (!(u > 0.0) || u >= support_end()) return 0.0;
  const std::size_t i = segment(u);
  const auto& a = knots_[i];
  const auto& b = knots_[i + 1];
  return a.value + (b.value - a.value) * (u - a.time) / (b.time - a.time);
}

double ImpactKernel::derivative(double u) const noexcept {
  if (u < 0.0 || u >= support_end()) return 0.0;
  const std::size_t i = segment(u);
  const auto& a = knots_[i];
  const auto& b = knots_[i + 1];
  return (b.value - a.value) / (b.time - a.time);
}

double ImpactKernel::cumulative(double u) const noexcept {
  if (!(u > 0.0)) return 0.0;
  if (u >= support_end()) return 1.0;
  const std::size_t i = segment(u);
  const auto& a = knots_[i];
  const double s = u - a.time;
  const double slope = (knots_[i + 1].value - a.value) / (knots_[i + 1].time - a.time);
  return cumulative_at_knot_[i] + a.value * s + 0.5 * slope * s * s;
}

double ImpactKernel::max_density() const noexcept {
  double m = 0.0;
  for (const auto& k : knots_) m = std::max(m, k.value);
  return m;
}

double ImpactKernel::derivative_l1() const noexcept {
  double total = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) total += std::abs(knots_[i].value - knots_[i - 1].value);
  return total;
}

LossPath::LossPath(double dt) : dt_(dt) {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidParameter, "loss path dt must be positive");
}

void LossPath::append(double value) {
  require(value >= 0.0 && value <= 1.0 + 1e-12, ErrorKind::Domain, "loss value outside [0, 1]");
  require(values_.empty() || value >= values_.back(), ErrorKind::Domain, "loss path must be nondecreasing");
  values_.push_back(std::min(value, 1.0));
}

double LossPath::value_at(double t) const {
  require(!values_.empty(), ErrorKind::Domain, "empty loss path");
  require(t >= 0.0 && t <= horizon() * (1.0 + 1e-12), ErrorKind::Domain, "time outside loss path horizon");
  const auto k = static_cast<std::size_t>(std::floor(t / dt_ + 1e-9));
  return values_[std::min(k, values_.size() - 1)];
}

namespace {

struct Window {
  std::size_t first;
  std::size_t last;  // inclusive
};

Window check_and_window(const ImpactKernel& kernel, const LossPath& loss, double t) {
  require(loss.size() > 0, ErrorKind::Domain, "empty loss path");
  if (loss.dt() > kernel.support_end() / 8.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "loss grid step " << loss.dt() << " exceeds support_end/8 = " << kernel.support_end() / 8.0;
    fail(ErrorKind::Resolution, msg.str());
  }
  require(t >= 0.0 && t <= loss.horizon() * (1.0 + 1e-12), ErrorKind::Domain,
          "convolution time outside loss path horizon");
  const double dt = loss.dt();
  const double last = std::min(std::floor(t / dt + 1e-9), static_cast<double>(loss.size() - 1));
  // One extra cell on the left; K's antiderivative saturates at 1 so the
  // overlap is harmless.
  const double first = std::max(0.0, std::floor((t - kernel.support_end()) / dt) - 1.0);
  return {static_cast<std::size_t>(std::min(first, last)), static_cast<std::size_t>(last)};
}

}  // namespace

double convolve_loss(const ImpactKernel& kernel, const LossPath& loss, double t) {
  const Window w = check_and_window(kernel, loss, t);
  const auto& v = loss.values();
  const double dt = loss.dt();
  double result = w.first == 0 ? 0.0 : v[w.first - 1];
  for (std::size_t k = w.first; k <= w.last; ++k) {
    const double jump = v[k] - (k == 0 ? 0.0 : v[k - 1]);
    if (jump != 0.0) result += jump * kernel.cumulative(t - static_cast<double>(k) * dt);
  }
  return result;
}

double loss_smoothing_rate(const ImpactKernel& kernel, const LossPath& loss, double t) {
  const Window w = check_and_window(kernel, loss, t);
  const auto& v = loss.values();
  const double dt = loss.dt();
  double rate = 0.0;
  for (std::size_t k = w.first; k <= w.last; ++k) {
    const double jump = v[k] - (k == 0 ? 0.0 : v[k - 1]);
    if (jump != 0.0) rate += jump * kernel.density(t - static_cast<double>(k) * dt);
  }
  return rate;
}

}  // namespace sysrisk
