#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace react {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to turn stream tags into seeds.
constexpr std::uint64_t hash_tag(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seeds an independent stream for (seed, purpose, index). Each subsystem draws
// from its own stream so that runs differing only in, say, the network model
// see identical detector output.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(seed ^ hash_tag(tag)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Explicit random stream passed to every stochastic operation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
      : engine_(derive_seed(seed, tag, index)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean = 0.0, double sigma = 1.0) {
    if (sigma <= 0.0) return mean;
    return std::normal_distribution<double>(mean, sigma)(engine_);
  }

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    return std::poisson_distribution<int>(lambda)(engine_);
  }

  double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }

  // Number of frames until a per-frame event of probability p first occurs (>= 1).
  int geometric(double p) {
    if (p >= 1.0) return 1;
    return 1 + std::geometric_distribution<int>(p)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace react
