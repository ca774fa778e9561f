#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace modpde {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed for a numbered stream of a root seed.
///
/// Per-component streams used by the experiment runner:
///   1 = modulation path, 2 = initial data, 3 = operator probe inputs,
///   4 = ensemble base (member i uses derive_seed(derive_seed(root, 4), i)).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept
{
  return mix64(root ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// std::mt19937_64 (whose output sequence the standard fixes) with explicit
/// uniform/normal transforms, so draws are identical across standard libraries;
/// the std distributions are implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) noexcept : engine_(mix64(seed)) {}

  std::uint64_t next_u64() noexcept { return engine_(); }

  /// Uniform in (0, 1].
  double uniform() noexcept
  {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal() noexcept
  {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

} // namespace modpde
