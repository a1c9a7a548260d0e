#ifndef GRAPHCF_TYPES_HPP
#define GRAPHCF_TYPES_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphcf {

using Id = std::int32_t;

// Sentinel stored in feedback rows for padded slots. Embedding lookups map it
// to the extra trainable row at the end of each table.
inline constexpr Id kPad = -1;

enum class Side { User, Item };

inline const char* side_name(Side s) { return s == Side::User ? "user" : "item"; }

enum class Status {
  Ok = 0,
  InvalidArgument,
  Parse,
  Io,
  Config,
  State,
  Numeric,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

// --- deterministic randomness helpers ---------------------------------------
//
// Library code draws only raw mt19937_64 outputs (the engine sequence is fixed
// by the standard); std:: distributions are avoided because their output is
// implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-entity stream seed: identical (seed, stream) always yields the same
// generator state, independent of processing order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

// Uniform in [0, n). Modulo bias is below 2^-40 for any n this project uses.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

template <typename T>
void shuffle_indices(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace graphcf

#endif
