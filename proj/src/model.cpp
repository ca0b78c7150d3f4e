#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace sysrisk {

namespace {

double argument(const CoefficientPoint& p, CoefficientArg arg) {
  switch (arg) {
    case CoefficientArg::T: return p.t;
    case CoefficientArg::X: return p.x;
    case CoefficientArg::M: return p.M;
    case CoefficientArg::L: return p.L;
  }
  return 0.0;
}

const char* arg_name(CoefficientArg arg) {
  switch (arg) {
    case CoefficientArg::T: return "t";
    case CoefficientArg::X: return "x";
    case CoefficientArg::M: return "M";
    case CoefficientArg::L: return "L";
  }
  return "?";
}

void check_thresholds(const std::vector<double>& theta) {
  require(theta.size() >= 2 && theta.front() == 0.0 && theta.back() == 1.0, ErrorKind::Configuration,
          "loss thresholds must start at 0 and end at 1");
  for (std::size_t i = 1; i < theta.size(); ++i)
    require(theta[i] > theta[i - 1], ErrorKind::Configuration, "loss thresholds must be strictly increasing");
}

}  // namespace

Coefficient::Coefficient(Form form) : form_(std::move(form)) {}

Coefficient Coefficient::affine(CoefficientArg arg, double intercept, double slope) {
  return Coefficient(Affine{arg, intercept, slope, -std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity()});
}

Coefficient Coefficient::piecewise(std::vector<double> thresholds, std::vector<double> values) {
  check_thresholds(thresholds);
  require(values.size() + 1 == thresholds.size(), ErrorKind::Configuration,
          "piecewise coefficient needs one value per loss interval");
  return Coefficient(PiecewiseInLoss{std::move(thresholds), std::move(values)});
}

Coefficient Coefficient::separable(Coefficient time_factor, Coefficient space_factor) {
  require(!time_factor.depends_on(CoefficientArg::X) && !time_factor.depends_on(CoefficientArg::M) &&
              !time_factor.depends_on(CoefficientArg::L),
          ErrorKind::Configuration, "separable time factor may depend on t only");
  require(!space_factor.depends_on(CoefficientArg::T) && !space_factor.depends_on(CoefficientArg::M) &&
              !space_factor.depends_on(CoefficientArg::L),
          ErrorKind::Configuration, "separable space factor may depend on x only");
  return Coefficient(Separable{std::make_shared<const Coefficient>(std::move(time_factor)),
                               std::make_shared<const Coefficient>(std::move(space_factor))});
}

double Coefficient::operator()(const CoefficientPoint& p) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return f.value;
        } else if constexpr (std::is_same_v<T, Affine>) {
          return std::clamp(f.intercept + f.slope * argument(p, f.arg), f.lower, f.upper);
        } else if constexpr (std::is_same_v<T, PiecewiseInLoss>) {
          return piecewise_loss_value(f.thresholds, f.values, p.L);
        } else {
          return (*f.time_factor)(p) * (*f.space_factor)(p);
        }
      },
      form_);
}

bool Coefficient::depends_on(CoefficientArg arg) const noexcept {
  return std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return false;
        } else if constexpr (std::is_same_v<T, Affine>) {
          return f.arg == arg && f.slope != 0.0;
        } else if constexpr (std::is_same_v<T, PiecewiseInLoss>) {
          return arg == CoefficientArg::L && f.values.size() > 1;
        } else {
          return f.time_factor->depends_on(arg) || f.space_factor->depends_on(arg);
        }
      },
      form_);
}

std::size_t piecewise_loss_index(const std::vector<double>& thresholds, double ell) {
  require(ell >= 0.0 && ell <= 1.0, ErrorKind::Domain, "loss level outside [0, 1]");
  require(thresholds.size() >= 2, ErrorKind::Configuration, "need at least one loss interval");
  const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), ell);
  const auto idx = static_cast<std::size_t>(it - thresholds.begin());
  return std::min(idx == 0 ? 0 : idx - 1, thresholds.size() - 2);
}

double piecewise_loss_value(const std::vector<double>& thresholds, const std::vector<double>& values, double ell) {
  require(values.size() + 1 == thresholds.size(), ErrorKind::Configuration,
          "piecewise coefficient needs one value per loss interval");
  return values[piecewise_loss_index(thresholds, ell)];
}

void ModelCoefficients::check_signatures() const {
  check_thresholds(theta);
  struct Rule {
    const char* name;
    const Coefficient* c;
    bool t, x, m, l;
  };
  const Rule rules[] = {
      {"mu", &mu, true, true, false, false},     {"pi", &pi, true, false, true, true},
      {"gamma", &gamma, true, false, true, true}, {"sigma", &sigma, true, true, false, false},
      {"rho", &rho, true, false, true, true},     {"alpha", &alpha, true, true, true, true},
  };
  for (const auto& r : rules) {
    const bool allowed[] = {r.t, r.x, r.m, r.l};
    const CoefficientArg args[] = {CoefficientArg::T, CoefficientArg::X, CoefficientArg::M, CoefficientArg::L};
    for (int i = 0; i < 4; ++i) {
      if (!allowed[i] && r.c->depends_on(args[i]))
        fail(ErrorKind::Configuration,
             std::string("model.") + r.name + " may not depend on " + arg_name(args[i]));
    }
  }
  require(eps_nondegeneracy > 0.0 && eps_nondegeneracy < 1.0, ErrorKind::Configuration,
          "model.eps_nondegeneracy must lie in (0, 1)");
  require(growth_constant > 0.0, ErrorKind::Configuration, "model.growth_constant must be positive");
  require(sigma_max >= eps_nondegeneracy, ErrorKind::Configuration, "model.sigma_max below eps_nondegeneracy");
}

double ModelCoefficients::drift(double t, double x, const Observables& obs) const {
  const CoefficientPoint p{t, x, obs.M, obs.L};
  const double base = mu(p);
  const double reversion = pi(p);
  if (reversion == 0.0) return base;
  return base + reversion * (obs.M + gamma(p) * obs.L - x);
}

double ModelCoefficients::effective_drift(double t, double x, const Observables& obs) const {
  const double a = contagion(t, x, obs);
  return drift(t, x, obs) - (a == 0.0 ? 0.0 : a * obs.Lfrak_rate);
}

double ModelCoefficients::volatility(double t, double x) const { return sigma(CoefficientPoint{t, x, 0.0, 0.0}); }

double ModelCoefficients::correlation(double t, const Observables& obs) const {
  return rho(CoefficientPoint{t, 0.0, obs.M, obs.L});
}

double ModelCoefficients::contagion(double t, double x, const Observables& obs) const {
  return alpha(CoefficientPoint{t, x, obs.M, obs.L});
}

bool ModelCoefficients::sigma_separable() const noexcept {
  return sigma.is_constant() || std::holds_alternative<Coefficient::Separable>(sigma.form()) ||
         !(sigma.depends_on(CoefficientArg::T) && sigma.depends_on(CoefficientArg::X));
}

bool ModelCoefficients::decoupled() const noexcept {
  const auto zero = [](const Coefficient& c) {
    const auto* k = std::get_if<Coefficient::Constant>(&c.form());
    return k != nullptr && k->value == 0.0;
  };
  return zero(pi) && zero(alpha);
}

void validate_coefficients(const ModelCoefficients& coeffs, const SamplingBox& box) {
  coeffs.check_signatures();
  const CounterRng rng(box.seed);
  const double eps = coeffs.eps_nondegeneracy;
  for (std::size_t s = 0; s < box.samples; ++s) {
    const auto u = rng.uniforms(1, s);
    const auto v = rng.uniforms(2, s);
    const CoefficientPoint p{u[0] * box.t_max, u[1] * box.x_max, v[0] * box.M_max, v[1]};
    const Observables obs{p.M, p.L, 0.0, 0.0};
    std::ostringstream where;
    where << " at sample " << s << " (t=" << p.t << ", x=" << p.x << ", M=" << p.M << ", L=" << p.L << ")";
    const double sig = coeffs.volatility(p.t, p.x);
    require(sig >= eps && sig <= coeffs.sigma_max, ErrorKind::Validation,
            "sigma outside [eps_nondegeneracy, sigma_max]" + where.str());
    const double r = coeffs.correlation(p.t, obs);
    require(r >= 0.0 && r <= 1.0 - eps, ErrorKind::Validation, "rho outside [0, 1 - eps_nondegeneracy]" + where.str());
    require(coeffs.pi(p) >= 0.0, ErrorKind::Validation, "pi must be nonnegative" + where.str());
    require(coeffs.contagion(p.t, p.x, obs) >= 0.0, ErrorKind::Validation, "alpha must be nonnegative" + where.str());
    const double b = coeffs.drift(p.t, p.x, obs);
    require(std::abs(b) <= coeffs.growth_constant * (1.0 + std::abs(p.x) + std::abs(p.M)), ErrorKind::Validation,
            "drift violates the linear-growth bound" + where.str());
  }
}

}  // namespace sysrisk
