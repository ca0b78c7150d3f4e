#include "particles.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace sysrisk {

namespace {

constexpr std::size_t kRejectionBudget = 1'000'000;

void refresh_observables(ParticleState& s) {
  CompensatedSum mass, mean;
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!s.alive[i]) continue;
    mass.add(s.weights[i]);
    mean.add(s.weights[i] * s.x[i]);
    ++count;
  }
  s.alive_mass = mass.value();
  s.alive_count = count;
  s.obs.M = mean.value();
  s.obs.L = std::min(1.0, s.loss_sum.value());
}

}  // namespace

double Histogram::total_mass() const noexcept {
  CompensatedSum m;
  for (double d : density) m.add(d * bin_width);
  return m.value();
}

ParticleState init_system(const ParticleConfig& cfg) {
  require(cfg.N >= 1, ErrorKind::Configuration, "particles.N must be at least 1");
  require(cfg.dt > 0.0 && std::isfinite(cfg.dt), ErrorKind::Configuration, "particles.dt must be positive");
  require(cfg.horizon > 0.0, ErrorKind::Configuration, "particles.T must be positive");
  require(cfg.weights.lower > 0.0, ErrorKind::Configuration, "weight lower bound must be positive");
  if (cfg.initial.kind == InitialLaw::Kind::PointMass)
    require(cfg.initial.point > 0.0, ErrorKind::Configuration, "point-mass initial law must lie in (0, inf)");

  ParticleState s(cfg.dt);
  s.x.resize(cfg.N);
  s.alive.assign(cfg.N, 1);
  s.default_time.assign(cfg.N, std::numeric_limits<double>::quiet_NaN());
  s.weights.resize(cfg.N);

  const CounterRng rng(cfg.seed);
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < cfg.N; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      const double x = cfg.initial.draw(rng, i, attempt);
      if (x > 0.0) {
        s.x[i] = x;
        break;
      }
      if (++rejected > kRejectionBudget)
        fail(ErrorKind::Configuration, "initial law puts too much mass at or below 0 (rejection budget exhausted)");
    }
  }

  CompensatedSum total;
  for (std::size_t i = 0; i < cfg.N; ++i) {
    const double a = cfg.weights(s.x[i]);
    if (!(a >= cfg.weights.lower && a <= cfg.weights.upper)) {
      std::ostringstream msg;
      msg << "weight function a(" << s.x[i] << ") = " << a << " outside [" << cfg.weights.lower << ", "
          << cfg.weights.upper << "]";
      fail(ErrorKind::Configuration, msg.str());
    }
    s.weights[i] = a;
    total.add(a);
  }
  const double norm = total.value();
  for (auto& a : s.weights) a /= norm;

  s.loss.append(0.0);
  refresh_observables(s);
  return s;
}

void step(ParticleState& s, const ParticleConfig& cfg, const ModelCoefficients& coeffs, const ImpactKernel& kernel,
          double dW0, const CounterRng& rng) {
  const double dt = s.dt;
  const double t = s.t;
  const std::size_t k = s.step;
  const double t_next = static_cast<double>(k + 1) * dt;

  const double lfrak_next = convolve_loss(kernel, s.loss, t_next);
  const double d_lfrak = lfrak_next - s.obs.Lfrak;
  const Observables obs = s.obs;
  const double rho = coeffs.correlation(t, obs);
  const double idio = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double sqrt_dt = std::sqrt(dt);
  const double eps = coeffs.eps_nondegeneracy;

  const std::size_t n = s.x.size();
  std::vector<std::uint8_t> defaulted(n, 0);
  std::atomic<std::size_t> first_bad{n};
  std::atomic<std::size_t> first_degenerate{n};

  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!s.alive[i]) continue;
      const double x = s.x[i];
      const double sig = coeffs.volatility(t, x);
      if (sig < eps && !cfg.hooks.allow_degenerate_sigma) {
        std::size_t cur = first_degenerate.load();
        while (i < cur && !first_degenerate.compare_exchange_weak(cur, i)) {}
        continue;
      }
      const double b = coeffs.drift(t, x, obs);
      const double a = d_lfrak == 0.0 ? 0.0 : coeffs.contagion(t, x, obs);
      const double z = cfg.hooks.zero_idiosyncratic_noise ? 0.0 : sqrt_dt * rng.normal(i, 2 * k);
      const double x_new = x + b * dt - a * d_lfrak + sig * (idio * z + rho * dW0);
      if (!std::isfinite(x_new)) {
        std::size_t cur = first_bad.load();
        while (i < cur && !first_bad.compare_exchange_weak(cur, i)) {}
        continue;
      }
      s.x[i] = x_new;
      if (x_new <= 0.0) {
        defaulted[i] = 1;
      } else if (cfg.bridge_correction && sig > 0.0) {
        // Probability that a Brownian bridge with these endpoints touched 0.
        const double q = 2.0 * x * x_new / (sig * sig * dt);
        if (q < 745.0 && rng.uniforms(i, 2 * k + 1)[0] < std::exp(-q)) defaulted[i] = 1;
      }
    }
  });

  if (first_degenerate.load() < n) {
    std::ostringstream msg;
    msg << "sigma below eps_nondegeneracy for particle " << first_degenerate.load() << " at step " << k;
    fail(ErrorKind::Validation, msg.str());
  }
  if (first_bad.load() < n) {
    std::ostringstream msg;
    msg << "non-finite position for particle " << first_bad.load() << " at step " << k << " (t=" << t << ")";
    fail(ErrorKind::NumericalDivergence, msg.str());
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!defaulted[i]) continue;
    s.alive[i] = 0;
    s.default_time[i] = t_next;
    s.x[i] = 0.0;
    s.loss_sum.add(s.weights[i]);
  }
  s.t = t_next;
  s.step = k + 1;
  refresh_observables(s);
  s.loss.append(s.obs.L);
  s.obs.Lfrak = convolve_loss(kernel, s.loss, t_next);
  s.obs.Lfrak_rate = loss_smoothing_rate(kernel, s.loss, t_next);
}

Histogram empirical_density(const ParticleState& state, double bin_width, double x_max) {
  require(bin_width > 0.0, ErrorKind::InvalidParameter, "histogram bin width must be positive");
  if (x_max <= 0.0) {
    double hi = 0.0;
    for (std::size_t i = 0; i < state.x.size(); ++i)
      if (state.alive[i]) hi = std::max(hi, state.x[i]);
    x_max = std::max(bin_width, std::ceil(hi / bin_width) * bin_width);
    if (hi >= x_max) x_max += bin_width;
  }
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::round(x_max / bin_width)));
  std::vector<CompensatedSum> mass(bins);
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    if (!state.alive[i]) continue;
    const auto j = static_cast<std::size_t>(std::max(0.0, std::floor(state.x[i] / bin_width)));
    mass[std::min(j, bins - 1)].add(state.weights[i]);
  }
  Histogram h;
  h.bin_width = bin_width;
  h.density.resize(bins);
  for (std::size_t j = 0; j < bins; ++j) h.density[j] = mass[j].value() / bin_width;
  return h;
}

ParticleRun run(const ParticleConfig& cfg, const ModelCoefficients& coeffs, const ImpactKernel& kernel,
                const NoisePath& noise) {
  coeffs.check_signatures();
  const std::size_t m = coarsening_factor(noise, cfg.dt);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  require(std::abs(static_cast<double>(steps) * cfg.dt - cfg.horizon) <= 1e-9 * cfg.horizon, ErrorKind::Configuration,
          "particles.T must be an integer multiple of particles.dt");
  require(steps * m <= noise.increments.size(), ErrorKind::Configuration,
          "noise path horizon is shorter than the particle horizon");
  for (double ts : cfg.snapshot_times)
    require(ts >= 0.0 && ts <= cfg.horizon + 1e-12, ErrorKind::Configuration, "snapshot time outside [0, T]");

  const CounterRng rng(cfg.seed);
  ParticleRun out{{}, init_system(cfg), {}, {}};
  ParticleState& s = out.final_state;
  auto& tr = out.trajectory;

  auto record = [&](double seconds) {
    tr.t.push_back(s.t);
    tr.obs.push_back(s.obs);
    tr.alive_count.push_back(s.alive_count);
    tr.mass_balance_error.push_back(std::abs(s.alive_mass + s.obs.L - 1.0));
    tr.step_seconds.push_back(seconds);
    for (double ts : cfg.snapshot_times) {
      if (std::abs(ts - s.t) <= 0.5 * cfg.dt * (1.0 + 1e-9) &&
          (out.snapshots.empty() || out.snapshots.back().t != s.t)) {
        ParticleSnapshot snap;
        snap.t = s.t;
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (s.alive[i]) {
            snap.x.push_back(s.x[i]);
            snap.weight.push_back(s.weights[i]);
          }
        snap.histogram = empirical_density(s, cfg.histogram_bin);
        out.snapshots.push_back(std::move(snap));
      }
    }
    if (cfg.dump_paths && s.step % std::max<std::size_t>(1, cfg.path_stride) == 0) {
      const std::size_t count = std::min(cfg.path_particles, s.x.size());
      for (std::size_t i = 0; i < count; ++i) out.paths.push_back({s.t, i, s.x[i], s.alive[i] != 0});
    }
  };

  record(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto start = std::chrono::steady_clock::now();
    step(s, cfg, coeffs, kernel, coarse_increment(noise, m, k), rng);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record(seconds);
  }
  return out;
}

}  // namespace sysrisk
