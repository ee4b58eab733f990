#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "gridalloc/tensor.hpp"

namespace gridalloc {

/// Derives a stage seed from the root seed and a fixed label (FNV-1a over
/// the label, mixed with the root). Keeps stage-wise runs reproducible.
inline std::uint64_t seed_for(std::uint64_t root, std::string_view label) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : label) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  }
  h ^= root + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

inline void fill_uniform(Tensor& t, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data) v = dist(rng);
}

}  // namespace gridalloc
