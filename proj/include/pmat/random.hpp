#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pmat {

// 64-bit finalizer (murmur3 fmix64). Full avalanche, zero state.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

// Order-sensitive combine of up to three words into one hash.
inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t h = mix64(a + kGolden);
  h = mix64(h ^ (b + kGolden + (h << 6) + (h >> 2)));
  h = mix64(h ^ (c + kGolden + (h << 6) + (h >> 2)));
  return h;
}

// Maps 64 random bits onto [0, 1). 53-bit resolution.
inline double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Maps 64 random bits onto the open interval (0, 1); never returns 0 or 1.
inline double open_unit_from_bits(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// SplitMix64 sequential generator. Output is identical on every platform,
// so seeded runs reproduce bit for bit.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform01() { return unit_from_bits(next()); }

  // Uniform on (0, 1).
  double uniform_open01() { return open_unit_from_bits(next()); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SplitMix64::below: n must be positive");
    return next() % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t state_;
};

// First k elements of a seeded partial Fisher-Yates shuffle of 0..n-1.
// k >= n returns the full identity range.
inline std::vector<std::uint32_t> sample_distinct(std::size_t n, std::size_t k,
                                                  SplitMix64& rng) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  if (k >= n) return idx;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// Discrete Zipf distribution over ranks 1..n: P(rank = k) proportional to k^-s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t num_ranks, double exponent) : cumulative_(num_ranks) {
    if (num_ranks == 0) throw std::invalid_argument("ZipfSampler: num_ranks must be positive");
    if (!(exponent > 0.0)) throw std::invalid_argument("ZipfSampler: exponent must be positive");
    double total = 0.0;
    for (std::size_t k = 1; k <= num_ranks; ++k) {
      total += std::pow(static_cast<double>(k), -exponent);
      cumulative_[k - 1] = total;
    }
  }

  std::size_t num_ranks() const { return cumulative_.size(); }

  // Normalized mass of a rank in [1, num_ranks].
  double probability(std::size_t rank) const {
    if (rank < 1 || rank > cumulative_.size())
      throw std::out_of_range("ZipfSampler::probability: rank out of range");
    double total = cumulative_.back();
    double below = rank >= 2 ? cumulative_[rank - 2] : 0.0;
    return (cumulative_[rank - 1] - below) / total;
  }

  // Draws a rank in [1, num_ranks].
  std::size_t draw(SplitMix64& rng) const {
    double u = rng.uniform01() * cumulative_.back();
    std::size_t lo = 0, hi = cumulative_.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cumulative_[mid] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo + 1;
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace pmat
