#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace esim {

using Rng = std::mt19937_64;

/// Independent generator for a (seed, key...) tuple, e.g. (seed, hour, run).
/// Streams depend only on the tuple, so work split across threads stays
/// reproducible.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * keys.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace esim
