#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace nci {

// Deterministic xoshiro256** generator. All randomized operations derive
// named substreams from the single run seed so that per-item work can be
// scheduled in any order (or in parallel) without changing results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); unbiased via rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Derive an independent substream from (seed, tag, index). The tag keeps
  // distinct uses (pair sampling, band sampling, shuffles, ...) decorrelated.
  static Rng substream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = seed ^ fnv1a(tag);
    h = splitmix64(h);
    h ^= index;
    h = splitmix64(h);
    return Rng(h);
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

template <typename T>
void shuffle_in_place(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

inline std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  shuffle_in_place(perm, rng);
  return perm;
}

// k distinct values from [0, n), in draw order.
inline std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k && i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace nci
