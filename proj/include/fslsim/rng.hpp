#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fslsim {

// Derives a decorrelated child seed from a base seed and a stream tag.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

// Deterministic RNG. Wraps mt19937_64 but implements all distributions
// itself, since the std:: distribution objects are free to differ across
// standard libraries and that would break bitwise reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // standard normal, Box-Muller
  double normal();
  // Gamma(shape, 1), Marsaglia-Tsang squeeze
  double gamma(double shape);
  // uniform integer in [0, n), rejection sampled so it is unbiased
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace fslsim
