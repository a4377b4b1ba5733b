#ifndef OBSREC_RNG_HPP
#define OBSREC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace obsrec {

// Deterministic RNG wrapper. Distributions are hand-rolled on top of the
// raw mt19937_64 stream so outputs are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Derive an independent stream, e.g. per Monte Carlo trial.
  static Rng derive(std::uint64_t master, std::uint64_t index) {
    return Rng(master * 0x9E3779B97F4A7C15ull + index + 1);
  }

  double uniform01() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller, pair cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t integer(std::uint64_t bound) {  // [0, bound)
    return gen_() % bound;
  }

  bool coin() { return (gen_() & 1u) != 0; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace obsrec

#endif
