#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mmw {

using Rng = std::mt19937_64;

// Stream tags keep channel draws, exploration and power sampling on
// independent generators so adding draws to one never shifts another.
enum class Stream : std::uint32_t {
  kChannel = 1,
  kAgent = 2,
  kTraining = 3,
  kBaseline = 4,
  kRandomPolicy = 5,
  kPlacement = 6,
};

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t p : path) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return make_rng(seed, {static_cast<std::uint64_t>(stream), index});
}

}  // namespace mmw
