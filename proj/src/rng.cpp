#include "rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "error.hpp"

namespace sysrisk {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

CounterRng::Block CounterRng::block(std::uint64_t stream, std::uint64_t counter) const noexcept {
  Block c{static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

std::array<double, 2> CounterRng::uniforms(std::uint64_t stream, std::uint64_t counter) const noexcept {
  const Block b = block(stream, counter);
  return {to_open_unit(b[0], b[1]), to_open_unit(b[2], b[3])};
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t counter) const noexcept {
  const auto u = uniforms(stream, counter);
  return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
}

NoisePath make_noise_path(std::uint64_t seed, double dt, double horizon) {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidParameter, "noise dt must be positive");
  require(horizon >= 0.0, ErrorKind::InvalidParameter, "noise horizon must be nonnegative");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  const CounterRng rng(seed);
  NoisePath path;
  path.dt = dt;
  path.increments.resize(steps);
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) path.increments[k] = scale * rng.normal(kCommonNoiseStream, k);
  return path;
}

std::vector<double> cumulative_path(const NoisePath& noise) {
  std::vector<double> w(noise.increments.size() + 1, 0.0);
  for (std::size_t k = 0; k < noise.increments.size(); ++k) w[k + 1] = w[k] + noise.increments[k];
  return w;
}

std::size_t coarsening_factor(const NoisePath& noise, double coarse_dt) {
  require(noise.dt > 0.0, ErrorKind::InvalidParameter, "noise path has no time step");
  const double ratio = coarse_dt / noise.dt;
  const double m = std::round(ratio);
  require(m >= 1.0 && std::abs(ratio - m) <= 1e-9 * m, ErrorKind::Configuration,
          "solver dt " + std::to_string(coarse_dt) + " is not an integer multiple of the noise dt " +
              std::to_string(noise.dt) + " (noise may only be coarsened by summing increments)");
  return static_cast<std::size_t>(m);
}

double coarse_increment(const NoisePath& noise, std::size_t m, std::size_t k) {
  const std::size_t begin = k * m;
  require(begin + m <= noise.increments.size(), ErrorKind::Configuration,
          "noise path does not cover the requested horizon");
  double sum = 0.0;
  for (std::size_t i = begin; i < begin + m; ++i) sum += noise.increments[i];
  return sum;
}

std::uint64_t hash_increments(std::span<const double> increments) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : increments) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char byte : bytes) {
      h ^= byte;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace sysrisk
