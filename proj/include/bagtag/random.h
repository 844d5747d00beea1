#ifndef BAGTAG_RANDOM_H_
#define BAGTAG_RANDOM_H_

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bagtag {

// Mixes a stream index into a base seed (splitmix64 finalizer), so that
// members, rounds and folds get decorrelated generators from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator whose draws are identical across standard libraries:
// the engine is mt19937_64 and the distributions below are spelled out
// rather than taken from <random>, whose algorithms are unspecified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bagtag

#endif  // BAGTAG_RANDOM_H_
