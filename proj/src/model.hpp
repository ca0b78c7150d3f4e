#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace sysrisk {

struct Observables {
  double M = 0.0;           // <nu, Id>, unnormalized mean of the surviving mass
  double L = 0.0;           // loss
  double Lfrak = 0.0;       // smoothed loss K * L
  double Lfrak_rate = 0.0;  // K' * L
};

enum class CoefficientArg { T, X, M, L };

struct CoefficientPoint {
  double t = 0.0;
  double x = 0.0;
  double M = 0.0;
  double L = 0.0;
};

// A closed catalogue of coefficient shapes. Each model coefficient accepts a
// restricted set of arguments (sigma only (t, x), rho only (t, M, L), ...);
// ModelCoefficients enforces that at construction.
class Coefficient {
 public:
  struct Constant {
    double value;
  };
  struct Affine {
    CoefficientArg arg;
    double intercept;
    double slope;
    double lower;  // clamp, -inf when absent
    double upper;
  };
  struct PiecewiseInLoss {
    std::vector<double> thresholds;  // 0 = theta_0 < ... < theta_k = 1
    std::vector<double> values;      // one per piece
  };
  struct Separable {
    std::shared_ptr<const Coefficient> time_factor;
    std::shared_ptr<const Coefficient> space_factor;
  };
  using Form = std::variant<Constant, Affine, PiecewiseInLoss, Separable>;

  Coefficient() : form_(Constant{0.0}) {}
  explicit Coefficient(Form form);

  static Coefficient constant(double value) { return Coefficient(Constant{value}); }
  static Coefficient affine(CoefficientArg arg, double intercept, double slope);
  static Coefficient piecewise(std::vector<double> thresholds, std::vector<double> values);
  static Coefficient separable(Coefficient time_factor, Coefficient space_factor);

  double operator()(const CoefficientPoint& p) const;

  const Form& form() const noexcept { return form_; }
  bool depends_on(CoefficientArg arg) const noexcept;
  bool is_constant() const noexcept { return std::holds_alternative<Constant>(form_); }

 private:
  Form form_;
};

// Selects piece i with ell in [theta_{i-1}, theta_i); ell = 1 maps to the last piece.
double piecewise_loss_value(const std::vector<double>& thresholds, const std::vector<double>& values, double ell);
std::size_t piecewise_loss_index(const std::vector<double>& thresholds, double ell);

struct ModelCoefficients {
  Coefficient mu;     // (t, x)
  Coefficient pi;     // (t, M, L)
  Coefficient gamma;  // (t, M, L)
  Coefficient sigma;  // (t, x)
  Coefficient rho;    // (t, M, L)
  Coefficient alpha;  // (t, x, M, L)
  std::vector<double> theta{0.0, 1.0};
  double eps_nondegeneracy = 1e-3;
  double growth_constant = 10.0;
  double sigma_max = 10.0;

  // Throws Configuration if a coefficient uses an argument it may not depend on.
  void check_signatures() const;

  double drift(double t, double x, const Observables& obs) const;
  double effective_drift(double t, double x, const Observables& obs) const;
  double volatility(double t, double x) const;
  double correlation(double t, const Observables& obs) const;
  double contagion(double t, double x, const Observables& obs) const;

  bool sigma_separable() const noexcept;
  bool decoupled() const noexcept;  // pi == 0 and alpha == 0
};

struct SamplingBox {
  double t_max = 1.0;
  double x_max = 5.0;
  double M_max = 5.0;
  std::size_t samples = 10000;
  std::uint64_t seed = 0x5eed;
};

// Sampled check of non-degeneracy, correlation range, sign constraints and the
// linear-growth bound |b| <= C (1 + |x| + |M|). Throws Validation on the first
// offending sample.
void validate_coefficients(const ModelCoefficients& coeffs, const SamplingBox& box);

}  // namespace sysrisk
