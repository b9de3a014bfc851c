#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vkde {
namespace rng {

//! SplitMix64 mixing step; a bijection on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

//! Seed for replicate `index` derived from a root seed.  The rule is
//! splitmix64(root XOR splitmix64(index + 1)); both steps are bijections,
//! so distinct indices under one root can never collide.
inline std::uint64_t replicate_seed(std::uint64_t root, std::uint64_t index)
{
  return splitmix64(root ^ splitmix64(index + 1));
}

//! Seeded generator with explicit variate transforms.
//!
//! Uniforms are built directly from the top 53 bits of mt19937_64 output,
//! and every transform below is spelled out (Box-Muller, inverse CDF), so
//! a given seed yields bitwise-identical streams on any platform; the
//! standard library's distribution objects make no such promise.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) : gen_(seed) {}

  //! Uniform draw on the open interval (0, 1).
  double uniform()
  {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  //! Standard normal draw via Box-Muller (pairs are cached).
  double normal()
  {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  //! Standard Cauchy draw by inverse CDF.
  double cauchy() { return std::tan(M_PI * (uniform() - 0.5)); }

  //! Chi-square draw with four degrees of freedom: -2 log(u1 u2).
  double chi_square_4() { return -2.0 * std::log(uniform() * uniform()); }

  //! Student-t draw with four degrees of freedom, normal over
  //! sqrt(chi^2_4 / 4) on the same stream.
  double student_t4()
  {
    const double z = normal();
    return z / std::sqrt(chi_square_4() / 4.0);
  }

  //! Lomax (shifted Pareto) draw with cdf x / (1 + x) by inverse CDF.
  double lomax()
  {
    const double u = uniform();
    return u / (1.0 - u);
  }

  //! Classical Pareto draw on [1, inf) with cdf 1 - 1/x by inverse CDF.
  double pareto1() { return 1.0 / (1.0 - uniform()); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace rng
} // namespace vkde
