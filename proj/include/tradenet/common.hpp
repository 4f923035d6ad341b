#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace tradenet {

// Usage/configuration problems (bad config key, missing column, invalid
// hyperparameter). The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Data or numerical failures at run time (non-convergence, empty network,
// rank-deficient design). The CLI maps these to exit code 1.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

// Shortest round-trip decimal representation of a double. Exports rely on
// this being byte-stable across runs.
std::string format_double(double v);

// Fixed decimals, for display-style columns (percent shares, rounded ranks).
std::string format_fixed(double v, int decimals);

double parse_double(std::string_view text, bool& ok);
long parse_long(std::string_view text, bool& ok);

std::string lower_copy(std::string_view s);
std::string_view trim(std::string_view s);

// Derives an independent 64-bit RNG seed from a base seed and a stream index.
// SplitMix64 step; streams for (seed, 0), (seed, 1), ... do not overlap in
// practice and are stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// xorshift64* generator. Self-contained; sequences are identical across
// standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dULL;
  }

  // Uniform in [0, n).
  std::size_t bounded(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal();  // standard normal, Box-Muller

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[bounded(i)]);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Tasks write results
// into caller-owned slots indexed by i, so the merge order is fixed and the
// result is identical for any job count.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// FNV-1a over a byte string; used for config hashes in run manifests.
std::uint64_t fnv1a_hash(std::string_view bytes);

}  // namespace tradenet
