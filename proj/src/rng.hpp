#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace sysrisk {

// Philox4x32-10 counter-based generator. A draw is a pure function of
// (key, stream, counter), so parallel workers never share state and the
// sequence seen by a given particle does not depend on scheduling.
class CounterRng {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit CounterRng(std::uint64_t seed) noexcept;

  Block block(std::uint64_t stream, std::uint64_t counter) const noexcept;

  // Two independent uniforms in the open interval (0, 1), 53-bit resolution.
  std::array<double, 2> uniforms(std::uint64_t stream, std::uint64_t counter) const noexcept;

  // Standard normal via Box-Muller on one block.
  double normal(std::uint64_t stream, std::uint64_t counter) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

// Stream assignment shared by every solver.
inline constexpr std::uint64_t kCommonNoiseStream = 0x8000000000000000ULL;
inline constexpr std::uint64_t kInitCounterBase = 0x4000000000000000ULL;

// Discretized common Brownian path: increments[k] ~ N(0, dt) drawn from the
// dedicated common-noise stream at counter k.
struct NoisePath {
  double dt = 0.0;
  std::vector<double> increments;

  double horizon() const noexcept { return dt * static_cast<double>(increments.size()); }
};

NoisePath make_noise_path(std::uint64_t seed, double dt, double horizon);

// Running values W^0_{t_k}, k = 0..K (W_0 = 0).
std::vector<double> cumulative_path(const NoisePath& noise);

// Coarsening factor m with coarse_dt = m * noise.dt; throws if coarse_dt is
// not an integer multiple of the noise grid.
std::size_t coarsening_factor(const NoisePath& noise, double coarse_dt);

// Sum of increments [k * m, (k + 1) * m).
double coarse_increment(const NoisePath& noise, std::size_t m, std::size_t k);

// FNV-1a over the raw increment bytes; used to assert shared noise.
std::uint64_t hash_increments(std::span<const double> increments) noexcept;

}  // namespace sysrisk
