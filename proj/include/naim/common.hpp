#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace naim {

// Error taxonomy. DataError -> CLI exit 2, NumericError -> CLI exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
  using Error::Error;
};
// Malformed input: CSV parse failures, schema mismatches, bad config values.
struct DataError : Error {
  using Error::Error;
};
// Infeasible stratified splits (k > class count, empty classes, ...).
struct SplitError : Error {
  using Error::Error;
};
// Infeasible or unrepairable missingness injection.
struct InjectionError : Error {
  using Error::Error;
};
// Metric preconditions violated (single-class AUC, empty Wilcoxon sample, ...).
struct MetricError : Error {
  using Error::Error;
};
// Non-finite values in forward/backward/optimizer/training.
struct NumericError : Error {
  using Error::Error;
};

// --- deterministic seed derivation ---------------------------------------
// Stable across platforms: splitmix64 finalizer chained over the inputs.

constexpr std::uint64_t mix_fin(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t mix64(std::uint64_t h, std::uint64_t x) {
  return mix_fin(h ^ (x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

inline std::uint64_t mix64(std::initializer_list<std::uint64_t> xs) {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (std::uint64_t x : xs) h = mix64(h, x);
  return h;
}

inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_double(double v) { return std::bit_cast<std::uint64_t>(v); }

// --- seeded RNG ------------------------------------------------------------
// mt19937_64 raw draws only; all derived quantities (doubles, bounded ints,
// shuffles) are computed by hand so streams are identical on every platform.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). Lemire multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below: n must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(gen_()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(gen_()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k entries of a Fisher-Yates pass: a uniform k-subset in random order.
  template <typename T>
  void partial_shuffle(std::vector<T>& v, std::size_t k) {
    if (k > v.size()) throw Error("Rng::partial_shuffle: k exceeds size");
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(v.size() - i));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace naim
