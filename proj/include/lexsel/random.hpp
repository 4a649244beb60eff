#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace lexsel {

/// FNV-1a, 64-bit. Stable across platforms and runs; used to derive seeds,
/// never for content addressing.
inline std::uint64_t stable_hash(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Mixes a base seed with any number of string labels. Each label is length
/// prefixed so ("ab","c") and ("a","bc") derive different seeds.
template <typename... Labels>
std::uint64_t derive_seed(std::uint64_t base, const Labels&... labels) {
  std::uint64_t h = stable_hash(std::string_view(reinterpret_cast<const char*>(&base), sizeof base));
  auto mix = [&h](std::string_view label) {
    const auto n = static_cast<std::uint64_t>(label.size());
    h = stable_hash(std::string_view(reinterpret_cast<const char*>(&n), sizeof n), h);
    h = stable_hash(label, h);
  };
  (mix(std::string_view(labels)), ...);
  return h;
}

/// Seeded generator with a portable bounded-integer draw. std::shuffle and
/// std::uniform_int_distribution are implementation-defined, so permutations
/// here are built on raw mt19937_64 output to be reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Draws k distinct elements in draw order (partial Fisher-Yates).
  template <typename T>
  std::vector<T> sample(std::vector<T> pool, std::size_t k) {
    if (k > pool.size()) k = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
      auto j = i + static_cast<std::size_t>(below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Permutation of [0, n) drawn from `seed`.
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng(seed).shuffle(idx);
  return idx;
}

template <typename T>
std::vector<T> permuted(const std::vector<T>& v, std::uint64_t seed) {
  std::vector<T> out;
  out.reserve(v.size());
  for (auto i : permutation(v.size(), seed)) out.push_back(v[i]);
  return out;
}

}  // namespace lexsel
