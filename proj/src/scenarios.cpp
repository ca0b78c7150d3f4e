#include "scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "error.hpp"

namespace sysrisk {

namespace {

// Key-path aware view of a JSON object. Every key must be consumed before
// finish(); leftovers are reported as unknown keys.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorKind::Validation, where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& raw(const std::string& key) {
    require(has(key), ErrorKind::Validation, "missing required key '" + key_path(key) + "'");
    used_.insert(key);
    return j_.at(key);
  }

  Reader child(const std::string& key) { return Reader(raw(key), key_path(key)); }

  double number(const std::string& key) {
    const Json& v = raw(key);
    require(v.is_number(), ErrorKind::Validation, key_path(key) + ": expected a number");
    const double d = v.get<double>();
    require(std::isfinite(d), ErrorKind::Validation, key_path(key) + ": must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key) {
    const double d = number(key);
    require(d > 0.0, ErrorKind::Validation, key_path(key) + ": must be > 0");
    return d;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  std::uint64_t integer(const std::string& key) {
    const Json& v = raw(key);
    require(v.is_number_integer() && (v.is_number_unsigned() || v.get<long long>() >= 0), ErrorKind::Validation,
            key_path(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t integer(const std::string& key, std::uint64_t fallback) { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    require(v.is_boolean(), ErrorKind::Validation, key_path(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    require(v.is_string(), ErrorKind::Validation, key_path(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = raw(key);
    require(v.is_array(), ErrorKind::Validation, key_path(key) + ": expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(v[i].is_number(), ErrorKind::Validation, key_path(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    return has(key) ? numbers(key) : fallback;
  }

  Interval interval(const std::string& key) {
    const auto v = numbers(key);
    require(v.size() == 2 && v[0] <= v[1], ErrorKind::Validation, key_path(key) + ": expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      require(used_.count(it.key()) != 0, ErrorKind::Validation, "unknown key '" + key_path(it.key()) + "'");
    }
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

CoefficientArg parse_arg(const std::string& s, const std::string& path) {
  if (s == "t") return CoefficientArg::T;
  if (s == "x") return CoefficientArg::X;
  if (s == "M") return CoefficientArg::M;
  if (s == "L") return CoefficientArg::L;
  fail(ErrorKind::Validation, path + ": argument must be one of t, x, M, L");
}

Coefficient parse_coefficient(const Json& j, const std::string& path, const std::vector<double>& theta) {
  if (j.is_number()) return Coefficient::constant(j.get<double>());
  Reader r(j, path);
  std::vector<std::string> tags;
  for (auto it = j.begin(); it != j.end(); ++it) tags.push_back(it.key());
  require(tags.size() == 1, ErrorKind::Validation,
          path + ": a coefficient is a number or an object with exactly one of constant, affine, piecewise, separable");
  const std::string& tag = tags.front();
  Coefficient out;
  if (tag == "constant") {
    out = Coefficient::constant(r.number("constant"));
  } else if (tag == "affine") {
    Reader a = r.child("affine");
    Coefficient::Affine form{};
    form.arg = parse_arg(a.string("arg"), a.key_path("arg"));
    form.intercept = a.number("intercept", 0.0);
    form.slope = a.number("slope");
    form.lower = a.number("lower", -std::numeric_limits<double>::infinity());
    form.upper = a.number("upper", std::numeric_limits<double>::infinity());
    require(form.lower <= form.upper, ErrorKind::Validation, a.where() + ": lower must not exceed upper");
    a.finish();
    out = Coefficient(form);
  } else if (tag == "piecewise") {
    auto values = r.numbers("piecewise");
    require(values.size() + 1 == theta.size(), ErrorKind::Validation,
            r.key_path("piecewise") + ": needs one value per interval of model.theta (" +
                std::to_string(theta.size() - 1) + ")");
    out = Coefficient::piecewise(theta, std::move(values));
  } else if (tag == "separable") {
    Reader s = r.child("separable");
    Coefficient time = parse_coefficient(s.raw("time"), s.key_path("time"), theta);
    Coefficient space = parse_coefficient(s.raw("space"), s.key_path("space"), theta);
    require(!space.depends_on(CoefficientArg::T) && !time.depends_on(CoefficientArg::X), ErrorKind::Validation,
            s.where() + ": time factor may depend on t only and space factor on x only");
    s.finish();
    out = Coefficient::separable(std::move(time), std::move(space));
  } else {
    fail(ErrorKind::Validation, "unknown key '" + path + "." + tag + "'");
  }
  r.finish();
  return out;
}

ModelCoefficients parse_model(Reader r, const ModelCoefficients& defaults) {
  ModelCoefficients m = defaults;
  m.theta = r.numbers("theta", {0.0, 1.0});
  require(m.theta.size() >= 2 && m.theta.front() == 0.0 && m.theta.back() == 1.0, ErrorKind::Validation,
          r.key_path("theta") + ": thresholds must start at 0 and end at 1");
  for (std::size_t i = 1; i < m.theta.size(); ++i)
    require(m.theta[i] > m.theta[i - 1], ErrorKind::Validation, r.key_path("theta") + ": must be strictly increasing");
  auto coef = [&](const std::string& key, bool required) {
    if (!required && !r.has(key)) return Coefficient::constant(0.0);
    return parse_coefficient(r.raw(key), r.key_path(key), m.theta);
  };
  m.mu = coef("mu", true);
  m.pi = coef("pi", false);
  m.gamma = coef("gamma", false);
  m.sigma = coef("sigma", true);
  m.rho = coef("rho", true);
  m.alpha = coef("alpha", true);
  m.eps_nondegeneracy = r.positive("eps_nondegeneracy", m.eps_nondegeneracy);
  m.growth_constant = r.positive("growth_constant", m.growth_constant);
  m.sigma_max = r.positive("sigma_max", m.sigma_max);
  r.finish();
  try {
    m.check_signatures();
  } catch (const Error& e) {
    fail(ErrorKind::Validation, r.where() + ": " + e.what());
  }
  return m;
}

ImpactKernel parse_kernel(Reader r) {
  const std::string shape = r.string("shape");
  ImpactKernel k = ImpactKernel::triangle(1.0);
  try {
    if (shape == "triangle") {
      k = ImpactKernel::triangle(r.number("support_end"));
    } else if (shape == "piecewise_linear") {
      const Json& knots = r.raw("knots");
      require(knots.is_array(), ErrorKind::Validation, r.key_path("knots") + ": expected a list of [time, value]");
      std::vector<KernelKnot> out;
      for (const auto& kn : knots) {
        require(kn.is_array() && kn.size() == 2 && kn[0].is_number() && kn[1].is_number(), ErrorKind::Validation,
                r.key_path("knots") + ": each knot is [time, value]");
        out.push_back({kn[0].get<double>(), kn[1].get<double>()});
      }
      k = ImpactKernel::piecewise_linear(std::move(out));
      if (r.has("support_end")) {
        require(std::abs(r.number("support_end") - k.support_end()) < 1e-12, ErrorKind::Validation,
                r.key_path("support_end") + ": disagrees with the last knot");
      }
    } else {
      fail(ErrorKind::Validation, r.key_path("shape") + ": expected triangle or piecewise_linear");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Validation) throw;
    fail(ErrorKind::Validation, r.where() + ": " + e.what());
  }
  r.finish();
  return k;
}

std::vector<double> read_samples(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(in.good(), ErrorKind::Validation, "cannot open empirical initial law " + file.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    double v;
    if (ss >> v) out.push_back(v);
  }
  return out;
}

InitialLaw parse_initial(Reader r, const std::filesystem::path& base) {
  const std::string kind = r.string("kind");
  InitialLaw law;
  if (kind == "point_mass") {
    law = InitialLaw::point_mass(r.positive("x0"));
  } else if (kind == "gaussian") {
    const double mean = r.number("mean");
    law = InitialLaw::gaussian(mean, r.positive("sd"));
  } else if (kind == "mixture") {
    auto means = r.numbers("means");
    auto sds = r.numbers("sds");
    auto weights = r.numbers("weights");
    require(means.size() == sds.size() && sds.size() == weights.size() && !means.empty(), ErrorKind::Validation,
            r.where() + ": means, sds and weights must have equal nonzero length");
    try {
      law = InitialLaw::mixture(std::move(means), std::move(sds), std::move(weights));
    } catch (const Error& e) {
      fail(ErrorKind::Validation, r.where() + ": " + e.what());
    }
  } else if (kind == "empirical") {
    std::filesystem::path file = r.string("file");
    if (file.is_relative()) file = base / file;
    law = InitialLaw::empirical(read_samples(file), file.string());
  } else {
    fail(ErrorKind::Validation, r.key_path("kind") + ": expected point_mass, gaussian, mixture or empirical");
  }
  r.finish();
  return law;
}

NoiseBand parse_band(Reader r) {
  NoiseBand b;
  if (r.has("endpoint")) b.endpoint = r.interval("endpoint");
  if (r.has("running_min")) b.running_min = r.interval("running_min");
  if (r.has("running_max")) b.running_max = r.interval("running_max");
  r.finish();
  return b;
}

ExperimentKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "single") return ExperimentKind::Single;
  if (s == "paired_alpha") return ExperimentKind::PairedAlpha;
  if (s == "kernel_sweep") return ExperimentKind::KernelSweep;
  if (s == "n_scaling") return ExperimentKind::NScaling;
  if (s == "ensemble") return ExperimentKind::Ensemble;
  fail(ErrorKind::Validation, path + ": expected single, paired_alpha, kernel_sweep, n_scaling or ensemble");
}

ExperimentConfig parse_experiment(Reader r, std::size_t index) {
  ExperimentConfig e;
  e.kind = parse_kind(r.string("kind"), r.key_path("kind"));
  e.name = r.string("name", std::string(to_string(e.kind)) + (index ? "_" + std::to_string(index) : ""));
  e.seeds = r.integer("seeds", 1);
  require(e.seeds >= 1, ErrorKind::Validation, r.key_path("seeds") + ": must be >= 1");
  e.use_regimes = r.boolean("regimes", false);
  if (r.has("solvers")) {
    const Json& v = r.raw("solvers");
    require(v.is_array() && !v.empty(), ErrorKind::Validation, r.key_path("solvers") + ": expected a nonempty list");
    e.run_particles = e.run_spde = false;
    for (const auto& s : v) {
      const std::string name = s.is_string() ? s.get<std::string>() : "";
      if (name == "particles") e.run_particles = true;
      else if (name == "spde") e.run_spde = true;
      else fail(ErrorKind::Validation, r.key_path("solvers") + ": entries are particles or spde");
    }
  }
  switch (e.kind) {
    case ExperimentKind::PairedAlpha:
      e.alphas = r.numbers("alphas");
      require(e.alphas.size() >= 2, ErrorKind::Validation, r.key_path("alphas") + ": needs at least two values");
      for (double a : e.alphas) require(a >= 0.0, ErrorKind::Validation, r.key_path("alphas") + ": must be >= 0");
      break;
    case ExperimentKind::KernelSweep:
      e.supports = r.numbers("supports");
      require(!e.supports.empty(), ErrorKind::Validation, r.key_path("supports") + ": must be nonempty");
      for (double s : e.supports) require(s > 0.0, ErrorKind::Validation, r.key_path("supports") + ": must be > 0");
      e.window = r.positive("window", e.window);
      break;
    case ExperimentKind::NScaling: {
      for (double n : r.numbers("N")) {
        require(n >= 1.0 && n == std::floor(n), ErrorKind::Validation, r.key_path("N") + ": entries are positive integers");
        e.Ns.push_back(static_cast<std::size_t>(n));
      }
      require(e.Ns.size() >= 2, ErrorKind::Validation, r.key_path("N") + ": needs at least two sizes");
      break;
    }
    case ExperimentKind::Ensemble:
      e.paths = r.integer("paths");
      require(e.paths >= 1, ErrorKind::Validation, r.key_path("paths") + ": must be >= 1");
      e.ensemble_times = r.numbers("times");
      e.ensemble_x_stride = r.integer("x_stride", 1);
      require(e.ensemble_x_stride >= 1, ErrorKind::Validation, r.key_path("x_stride") + ": must be >= 1");
      break;
    case ExperimentKind::Single:
      break;
  }
  r.finish();
  return e;
}

AnalyticCheck parse_analytic(Reader r) {
  AnalyticCheck a;
  a.times = r.numbers("times");
  a.tolerance = r.positive("tolerance");
  a.se_multiple = r.positive("se_multiple", a.se_multiple);
  a.max_seconds = r.number("max_seconds", 0.0);
  r.finish();
  return a;
}

ValidationConfig parse_validation(Reader r) {
  ValidationConfig v;
  const Json& checks = r.raw("checks");
  static const std::set<std::string> known{"conservation", "heat_kernel",    "first_passage", "boundary_decay",
                                           "gaussian_tail", "subgaussian", "aronson"};
  require(checks.is_array(), ErrorKind::Validation, r.key_path("checks") + ": expected a list");
  for (const auto& c : checks) {
    require(c.is_string() && known.count(c.get<std::string>()), ErrorKind::Validation,
            r.key_path("checks") + ": unknown check " + c.dump());
    v.checks.push_back(c.get<std::string>());
  }
  v.seeds = r.integer("seeds", v.seeds);
  v.time = r.positive("time", v.time);
  v.boundary_eps = r.numbers("boundary_eps", v.boundary_eps);
  v.boundary_min_exponent = r.number("boundary_min_exponent", v.boundary_min_exponent);
  v.tail_min_r2 = r.number("tail_min_r2", v.tail_min_r2);
  v.tail_levels = r.integer("tail_levels", v.tail_levels);
  if (r.has("subgaussian")) {
    Reader s = r.child("subgaussian");
    v.subgaussian_C_b = s.positive("C_b", v.subgaussian_C_b);
    v.subgaussian_C_sigma = s.positive("C_sigma", v.subgaussian_C_sigma);
    v.subgaussian_eps = s.positive("eps", v.subgaussian_eps);
    v.eta_frac = s.positive("eta_frac", v.eta_frac);
    s.finish();
  }
  if (r.has("aronson")) {
    Reader a = r.child("aronson");
    v.bound.c = a.positive("c", v.bound.c);
    v.bound.kappa = a.number("kappa", v.bound.kappa);
    require(v.bound.kappa > 0.0 && v.bound.kappa < 1.0, ErrorKind::Validation, a.key_path("kappa") + ": must lie in (0, 1)");
    v.bound.eps = a.positive("eps", v.bound.eps);
    v.bound.c_xy = a.number("c_xy", 0.0);
    const std::string mode = a.string("mode", "half_line");
    if (mode == "half_line") v.bound_mode = BoundMode::HalfLine;
    else if (mode == "whole_space") v.bound_mode = BoundMode::WholeSpace;
    else fail(ErrorKind::Validation, a.key_path("mode") + ": expected half_line or whole_space");
    if (a.has("t")) v.bound_t = a.interval("t");
    if (a.has("x")) v.bound_x = a.interval("x");
    require(v.bound_t.first > 0.0, ErrorKind::Validation, a.key_path("t") + ": must start after 0");
    v.bound_nt = a.integer("nt", v.bound_nt);
    v.bound_x_stride = a.integer("x_stride", v.bound_x_stride);
    v.bound_paths = a.integer("paths", v.bound_paths);
    a.finish();
  }
  if (r.has("heat_kernel")) v.heat_kernel = parse_analytic(r.child("heat_kernel"));
  if (r.has("first_passage")) {
    Reader f = r.child("first_passage");
    v.first_passage_N = f.integer("N", v.first_passage_N);
    v.first_passage.times = f.numbers("times");
    v.first_passage.tolerance = f.positive("tolerance");
    v.first_passage.se_multiple = f.positive("se_multiple", 3.0);
    v.first_passage.max_seconds = f.number("max_seconds", 0.0);
    f.finish();
  }
  r.finish();
  return v;
}

void check_times(const std::vector<double>& times, double horizon, const std::string& path) {
  for (double t : times)
    require(t >= 0.0 && t <= horizon + 1e-12, ErrorKind::Validation,
            path + ": time " + std::to_string(t) + " outside [0, horizon]");
}

}  // namespace

bool NoiseBand::contains(const NoisePath& noise) const {
  double w = 0.0, lo = 0.0, hi = 0.0;
  for (double dw : noise.increments) {
    w += dw;
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  auto in = [](const std::optional<Interval>& iv, double v) { return !iv || (v >= iv->first && v <= iv->second); };
  return in(endpoint, w) && in(running_min, lo) && in(running_max, hi);
}

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Single: return "single";
    case ExperimentKind::PairedAlpha: return "paired_alpha";
    case ExperimentKind::KernelSweep: return "kernel_sweep";
    case ExperimentKind::NScaling: return "n_scaling";
    case ExperimentKind::Ensemble: return "ensemble";
  }
  return "?";
}

Scenario parse_scenario(const Json& doc_in, const std::filesystem::path& origin) {
  const Json& doc = (doc_in.is_object() && doc_in.contains("manifest_version")) ? doc_in.at("scenario") : doc_in;
  Scenario s;
  s.source = doc;
  s.origin = origin;
  auto base = origin.has_parent_path() ? origin.parent_path() : std::filesystem::path(".");
  // Manifests live in the output tree; relative files resolve against the original scenario.
  if (&doc != &doc_in && doc_in.contains("scenario_dir") && doc_in.at("scenario_dir").is_string())
    base = doc_in.at("scenario_dir").get<std::string>();
  s.base_dir = std::filesystem::absolute(base);
  Reader r(doc, "");
  s.name = r.string("name", origin.stem().string());
  s.seed = r.integer("seed", 1);
  s.horizon = r.positive("horizon");
  s.threads = static_cast<unsigned>(r.integer("threads", 1));
  s.model = parse_model(r.child("model"), s.model);
  s.kernel = parse_kernel(r.child("kernel"));
  s.initial = parse_initial(r.child("initial"), base);

  if (r.has("particles")) {
    Reader p = r.child("particles");
    s.particles.N = p.integer("N", s.particles.N);
    require(s.particles.N >= 1, ErrorKind::Validation, p.key_path("N") + ": must be >= 1");
    s.particles.dt = p.positive("dt", s.particles.dt);
    s.particles.bridge_correction = p.boolean("bridge_correction", true);
    s.particles.histogram_bin = p.positive("histogram_bin", s.particles.histogram_bin);
    s.particles.path_stride = p.integer("path_stride", s.particles.path_stride);
    s.particles.path_particles = p.integer("path_particles", s.particles.path_particles);
    if (p.has("weights")) {
      Reader w = p.child("weights");
      s.particles.weights.intercept = w.number("intercept", 1.0);
      s.particles.weights.slope = w.number("slope", 0.0);
      s.particles.weights.lower = w.positive("lower", s.particles.weights.lower);
      s.particles.weights.upper = w.number("upper", s.particles.weights.upper);
      w.finish();
    }
    p.finish();
  }
  if (r.has("spde")) {
    Reader p = r.child("spde");
    s.spde.x_max = p.positive("x_max", s.spde.x_max);
    s.spde.nx = p.integer("nx", s.spde.nx);
    require(s.spde.nx >= 3, ErrorKind::Validation, p.key_path("nx") + ": must be >= 3");
    s.spde.dt = p.positive("dt", s.spde.dt);
    s.spde.clip_tolerance = p.positive("clip_tolerance", s.spde.clip_tolerance);
    s.spde.max_clipped_mass = p.positive("max_clipped_mass", s.spde.max_clipped_mass);
    s.spde.truncation_budget = p.positive("truncation_budget", s.spde.truncation_budget);
    s.spde.cfl = p.positive("cfl", s.spde.cfl);
    p.finish();
  }
  if (r.has("noise")) {
    Reader n = r.child("noise");
    s.noise.dt = n.positive("dt", s.noise.dt);
    if (n.has("band")) s.noise.band = parse_band(n.child("band"));
    s.noise.search_limit = n.integer("search_limit", s.noise.search_limit);
    if (n.has("regimes")) {
      const Json& regs = n.raw("regimes");
      require(regs.is_array(), ErrorKind::Validation, n.key_path("regimes") + ": expected a list");
      for (std::size_t i = 0; i < regs.size(); ++i) {
        Reader g(regs[i], n.key_path("regimes") + "[" + std::to_string(i) + "]");
        NoiseRegime reg;
        reg.name = g.string("name");
        reg.seed = g.integer("seed");
        if (g.has("band")) reg.band = parse_band(g.child("band"));
        g.finish();
        s.noise.regimes.push_back(std::move(reg));
      }
    }
    n.finish();
  }
  if (r.has("experiments")) {
    const Json& ex = r.raw("experiments");
    require(ex.is_array() && !ex.empty(), ErrorKind::Validation, "experiments: expected a nonempty list");
    for (std::size_t i = 0; i < ex.size(); ++i)
      s.experiments.push_back(parse_experiment(Reader(ex[i], "experiments[" + std::to_string(i) + "]"), i));
  } else {
    s.experiments.push_back(ExperimentConfig{});
    s.experiments.back().name = "single";
  }
  if (r.has("output")) {
    Reader o = r.child("output");
    s.output.snapshot_times = o.numbers("snapshot_times", {});
    s.output.heatgrid_stride = o.integer("heatgrid_stride", 0);
    s.output.heatgrid_x_stride = o.integer("heatgrid_x_stride", 1);
    require(s.output.heatgrid_x_stride >= 1, ErrorKind::Validation, "output.heatgrid_x_stride: must be >= 1");
    s.output.dump_paths = o.boolean("dump_paths", false);
    s.output.observables_every = o.number("observables_every", 0.0);
    require(s.output.observables_every >= 0.0, ErrorKind::Validation, "output.observables_every: must be >= 0");
    o.finish();
  }
  if (r.has("validation")) s.validation = parse_validation(r.child("validation"));
  r.finish();

  check_times(s.output.snapshot_times, s.horizon, "output.snapshot_times");
  for (std::size_t i = 0; i < s.experiments.size(); ++i)
    check_times(s.experiments[i].ensemble_times, s.horizon, "experiments[" + std::to_string(i) + "].times");
  for (const auto& e : s.experiments)
    require(!e.use_regimes || !s.noise.regimes.empty(), ErrorKind::Validation,
            "experiment '" + e.name + "' uses noise regimes but noise.regimes is empty");

  // Cross-module pre-checks: coefficient box, resolution floor, noise grid.
  SamplingBox box;
  box.t_max = s.horizon;
  box.x_max = s.spde.x_max;
  box.M_max = s.spde.x_max;
  box.samples = 2000;
  box.seed = s.seed;
  validate_coefficients(s.model, box);
  auto kernel_floor = [&](double support, double dt, const std::string& what) {
    require(dt <= support / 8.0 * (1.0 + 1e-12), ErrorKind::Validation,
            what + " dt " + std::to_string(dt) + " exceeds the kernel resolution floor support_end/8");
  };
  std::vector<double> supports{s.kernel.support_end()};
  for (const auto& e : s.experiments) supports.insert(supports.end(), e.supports.begin(), e.supports.end());
  for (double sup : supports) {
    kernel_floor(sup, s.particles.dt, "particles");
    kernel_floor(sup, s.spde.dt, "spde");
  }
  NoisePath probe;
  probe.dt = s.noise.dt;
  try {
    coarsening_factor(probe, s.particles.dt);
    coarsening_factor(probe, s.spde.dt);
  } catch (const Error& e) {
    fail(ErrorKind::Validation, std::string("noise.dt: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Validation, "cannot open scenario " + path.string());
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Validation, path.string() + ": parse error: " + e.what());
  }
  return parse_scenario(doc, path);
}

void override_seed(Scenario& s, std::uint64_t seed) {
  s.seed = seed;
  s.source["seed"] = seed;
}

void override_threads(Scenario& s, unsigned threads) {
  s.threads = std::max(1u, threads);
  s.source["threads"] = s.threads;
}

ParticleConfig particle_config(const Scenario& s, std::uint64_t seed) {
  ParticleConfig c = s.particles;
  c.seed = seed;
  c.horizon = s.horizon;
  c.initial = s.initial;
  c.threads = s.threads;
  c.snapshot_times = s.output.snapshot_times;
  c.dump_paths = s.output.dump_paths;
  return c;
}

SpdeConfig spde_config(const Scenario& s) {
  SpdeConfig c = s.spde;
  c.horizon = s.horizon;
  c.snapshot_times = s.output.snapshot_times;
  c.snapshot_stride = s.output.heatgrid_stride;
  return c;
}

ModelCoefficients with_alpha(const ModelCoefficients& m, double alpha) {
  ModelCoefficients out = m;
  out.alpha = Coefficient::constant(alpha);
  return out;
}

}  // namespace sysrisk
