#include <doctest.h>

#include <cmath>
#include <functional>

#include "error.hpp"
#include "kernels.hpp"

using namespace sysrisk;

namespace {

// Adaptive Simpson quadrature, used as an independent check of the exact antiderivative.
double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
  const double c = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fc = f(c);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double a_, double b_, double fa_, double fb_, double fc_, double whole_, double tol_, int d) -> double {
    const double c_ = 0.5 * (a_ + b_);
    const double l = 0.5 * (a_ + c_), r = 0.5 * (c_ + b_);
    const double fl = f(l), fr = f(r);
    const double left = (c_ - a_) / 6.0 * (fa_ + 4.0 * fl + fc_);
    const double right = (b_ - c_) / 6.0 * (fc_ + 4.0 * fr + fb_);
    if (d <= 0 || std::abs(left + right - whole_) <= 15.0 * tol_) return left + right + (left + right - whole_) / 15.0;
    return rec(a_, c_, fa_, fc_, fl, left, tol_ / 2.0, d - 1) + rec(c_, b_, fc_, fb_, fr, right, tol_ / 2.0, d - 1);
  };
  return rec(a, b, fa, fb, fc, whole, tol, depth);
}

LossPath step_loss(double dt, double tau, double horizon, double level = 1.0) {
  LossPath L(dt);
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  for (std::size_t k = 0; k < n; ++k) L.append(static_cast<double>(k) * dt >= tau - 1e-15 ? level : 0.0);
  return L;
}

}  // namespace

TEST_CASE("triangle kernel shape") {
  const auto k = ImpactKernel::triangle(0.015);
  CHECK(k.density(0.0075) == doctest::Approx(2.0 / 0.015));
  CHECK(k.density(0.0) == 0.0);
  CHECK(k.density(0.015) == 0.0);
  CHECK(k.density(-1.0) == 0.0);
  CHECK(k.density(0.02) == 0.0);
  CHECK(k.cumulative(0.015) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k.cumulative(1.0) == 1.0);
  CHECK(k.derivative_l1() == doctest::Approx(4.0 / 0.015));
  CHECK(k.max_density() == doctest::Approx(2.0 / 0.015));
  for (double eps : {0.001, 0.1, 3.0})
    CHECK(simpson([&](double u) { return ImpactKernel::triangle(eps).density(u); }, 0.0, eps, 1e-13) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel construction errors") {
  CHECK_THROWS_AS(ImpactKernel::triangle(0.0), Error);
  CHECK_THROWS_AS(ImpactKernel::triangle(-1.0), Error);
  CHECK_THROWS_AS(ImpactKernel::piecewise_linear({{0.0, 0.0}, {1.0, 1.0}}), Error);
  CHECK_THROWS_AS(ImpactKernel::piecewise_linear({{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}}), Error);  // mass 0.5
  CHECK_THROWS_AS(ImpactKernel::piecewise_linear({{0.0, 0.1}, {0.5, 3.9}, {1.0, 0.0}}), Error);  // nonzero trace
  CHECK_THROWS_AS(ImpactKernel::piecewise_linear({{0.0, 0.0}, {0.5, -1.0}, {1.0, 0.0}, {2.0, 0.0}}), Error);
}

TEST_CASE("piecewise-linear kernel with a plateau") {
  // Trapezoid 0 -> h on [0, 0.01], flat to 0.03, down to 0 at 0.04: area h * 0.03 = 1.
  const double h = 1.0 / 0.03;
  const auto k = ImpactKernel::piecewise_linear({{0.0, 0.0}, {0.01, h}, {0.03, h}, {0.04, 0.0}});
  CHECK(k.support_end() == doctest::Approx(0.04));
  CHECK(k.cumulative(0.04) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.cumulative(0.02) == doctest::Approx(0.5 * 0.01 * h + 0.01 * h));
  CHECK(k.derivative(0.005) == doctest::Approx(h / 0.01));
  CHECK(k.derivative(0.02) == 0.0);
  CHECK(k.derivative_l1() == doctest::Approx(2.0 * h));
}

TEST_CASE("convolution of a zero loss is zero") {
  const auto k = ImpactKernel::triangle(0.015);
  LossPath L(0.001);
  for (int i = 0; i < 100; ++i) L.append(0.0);
  for (double t : {0.0, 0.01, 0.05, 0.0999}) {
    CHECK(convolve_loss(k, L, t) == 0.0);
    CHECK(loss_smoothing_rate(k, L, t) == 0.0);
  }
}

TEST_CASE("step loss: saturation after the support and the antiderivative inside") {
  const double eps = 0.015, dt = eps / 10.0, tau = 0.0195;
  const auto k = ImpactKernel::triangle(eps);
  const LossPath L = step_loss(dt, tau, 0.1);
  const double tau_grid = std::ceil(tau / dt - 1e-9) * dt;  // first grid point carrying the loss
  CHECK(convolve_loss(k, L, tau_grid + eps) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(convolve_loss(k, L, 0.09) == doctest::Approx(1.0).epsilon(1e-14));
  for (double u : {0.001, 0.004, 0.0075, 0.011, 0.0149}) {
    const double t = tau_grid + u;
    const double oracle = simpson([&](double s) { return k.density(s); }, 0.0, u, 1e-14);
    CHECK(std::abs(convolve_loss(k, L, t) - oracle) < 1e-10);
    CHECK(std::abs(loss_smoothing_rate(k, L, t) - k.density(u)) < 1e-9);
  }
}

TEST_CASE("smoothing rate matches a finite difference of the smoothed loss") {
  const double eps = 0.02, dt = 0.001;
  const auto k = ImpactKernel::triangle(eps);
  LossPath L(dt);
  for (int i = 0; i < 200; ++i) L.append(std::min(1.0, 0.002 * i + (i > 50 ? 0.1 : 0.0)));
  const double h = 1e-7;
  for (double t : {0.0305, 0.0512, 0.0777, 0.1203}) {
    const double fd = (convolve_loss(k, L, t + h) - convolve_loss(k, L, t - h)) / (2.0 * h);
    CHECK(std::abs(fd - loss_smoothing_rate(k, L, t)) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("smoothed loss is monotone, bounded by L, and its rate by the kernel variation") {
  const auto k = ImpactKernel::triangle(0.01);
  LossPath L(0.001);
  double v = 0.0;
  for (int i = 0; i < 300; ++i) {
    v = std::min(1.0, v + ((i * 7919) % 13 == 0 ? 0.05 : 0.001));
    L.append(v);
  }
  double prev = 0.0;
  for (int i = 0; i <= 2990; ++i) {
    const double t = i * 1e-4;
    const double f = convolve_loss(k, L, t);
    CHECK(f >= prev - 1e-15);
    CHECK(f <= L.value_at(t) + 1e-15);
    CHECK(f >= 0.0);
    const double r = loss_smoothing_rate(k, L, t);
    CHECK(r >= -1e-12);
    CHECK(r <= k.derivative_l1());
    prev = f;
  }
}

TEST_CASE("shrinking support approaches the raw loss at continuity points") {
  double prev_err = 1.0;
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto k = ImpactKernel::triangle(eps);
    const double dt = eps / 8.0;
    const LossPath L = step_loss(dt, 0.25, 1.0);
    const double err = std::abs(convolve_loss(k, L, 0.3) - 1.0) + std::abs(convolve_loss(k, L, 0.2) - 0.0);
    CHECK(err <= prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-12);
}

TEST_CASE("resolution floor and domain errors") {
  const auto k = ImpactKernel::triangle(0.015);
  LossPath coarse(0.015 / 4.0);
  for (int i = 0; i < 10; ++i) coarse.append(0.0);
  try {
    convolve_loss(k, coarse, 0.01);
    FAIL("expected a resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
  LossPath fine(0.001);
  for (int i = 0; i < 10; ++i) fine.append(0.0);
  CHECK_THROWS_AS(convolve_loss(k, fine, 0.5), Error);
  CHECK_THROWS_AS(fine.append(2.0), Error);
  LossPath dec(0.001);
  dec.append(0.5);
  CHECK_THROWS_AS(dec.append(0.4), Error);
}
