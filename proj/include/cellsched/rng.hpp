#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cellsched {

// SplitMix64 output function. The generator below is counter-based: state
// advances by a fixed odd gamma and each output is a bijective mix of the
// state, so streams can be split by deriving fresh keys.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for a named component stream. Components never share a stream;
// all randomness in a run flows from one master seed through this function.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view domain,
                                 std::uint64_t index = 0) {
  std::uint64_t s = master ^ fnv1a64(domain);
  splitmix64_next(s);
  s ^= 0x94d049bb133111ebULL * (index + 1);
  splitmix64_next(s);
  return s;
}

// Deterministic stream with the sampling primitives the simulator needs.
// Distributions are implemented by hand so the sequence depends only on the
// seed, not on a library's implementation choices.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // [0, n), widening-multiply range reduction
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // exact Poisson sample; Knuth's product method, chunked so the
  // exp(-mean) factor never underflows for large means
  std::int64_t poisson(double mean) {
    std::int64_t count = 0;
    while (mean > 400.0) {
      count += poisson_small(400.0);
      mean -= 400.0;
    }
    return count + poisson_small(mean);
  }

 private:
  std::int64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cellsched
