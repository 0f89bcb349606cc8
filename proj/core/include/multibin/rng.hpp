#ifndef MULTIBIN_RNG_HPP
#define MULTIBIN_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace multibin {

// SplitMix64 finalizer. Full-period bijection on 64-bit integers.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over the bytes of a string, mixed once more for avalanche.
std::uint64_t hash_string(std::string_view s);

// Stream derivation: a child seed that depends on every argument.
// Used for per-task streams (seed, task id) and per-epoch shuffles
// (seed, epoch) so that adding tasks or epochs never perturbs others.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

// Deterministic random source. The engine (mt19937_64) and every
// distribution below are fully specified, so identical seeds produce
// identical values on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Caches the spare deviate.
  double normal();

  // Uniform integer on [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Identity permutation of length n shuffled with the stream derived
// from (seed, epoch).
std::vector<int> shuffled_indices(std::size_t n, std::uint64_t seed, int epoch);

}  // namespace multibin

#endif  // MULTIBIN_RNG_HPP
