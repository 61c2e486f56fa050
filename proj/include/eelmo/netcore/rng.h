#ifndef EELMO_NETCORE_RNG_H_
#define EELMO_NETCORE_RNG_H_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace eelmo::net {

// Counter-based generator: output n is a SplitMix64 hash of (seed, n).
// Integer and uniform outputs are bit-identical across platforms; Normal()
// additionally depends on the platform's log/cos.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t NextU64();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n);
  // Standard normal via Box-Muller.
  double Normal();

  // Independent stream keyed by `stream`; does not advance this generator.
  SeededRng Fork(std::uint64_t stream) const;

  // Fisher-Yates shuffle.
  template <typename T>
  void Shuffle(std::vector<T> &items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // `count` distinct values from [0, n) \ {exclude}, in draw order.
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                    std::size_t count,
                                                    std::size_t exclude);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t Mix64(std::uint64_t x);

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_RNG_H_
