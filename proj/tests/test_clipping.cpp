#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <vkde/clipping.hpp>

using namespace vkde;

TEST_CASE("builtin clipping polynomial: regimes and frozen values")
{
  CHECK(ClippingSpec::builtin_p(-1.0) == 1.0);
  CHECK(ClippingSpec::builtin_p(0.0) == 1.0);
  CHECK(ClippingSpec::builtin_p(2.0) == 2.0);
  CHECK(ClippingSpec::builtin_p(5.5) == 5.5);
  // p(1) = 1 + q(1)/64 with q(1) = 1 + 2 + 9/4 + 7/4 + 7/8 = 7.875
  CHECK(ClippingSpec::builtin_p(1.0) ==
        Catch::Approx(1.123046875).epsilon(1e-15));
  // near zero p(t) = 1 + 42 t^6/64 + O(t^7): q(0) = 1 + 4 + 9 + 14 + 14 = 42
  const double t = 1e-2;
  CHECK(ClippingSpec::builtin_p(t) - 1.0 ==
        Catch::Approx(42.0 * std::pow(t, 6) / 64.0).epsilon(1e-1));
  CHECK(ClippingSpec::builtin_p(0.5) >= 1.0);
}

TEST_CASE("builtin clipping polynomial: smooth joins")
{
  // p identical to t to fifth order at t0 = 2: p(2-e) - (2-e) = O(e^6)
  for (double e : {1e-1, 1e-2}) {
    const double defect = ClippingSpec::builtin_p(2.0 - e) - (2.0 - e);
    CHECK(std::abs(defect) < 2.0 * std::pow(e, 6));
  }
  CHECK(ClippingSpec::builtin_p_prime(2.0 - 1e-12) ==
        Catch::Approx(1.0).margin(1e-9));
  CHECK(ClippingSpec::builtin_p_second(2.0 - 1e-12) ==
        Catch::Approx(0.0).margin(1e-9));
  // at the lower join p matches the constant 1 to fifth order as well
  CHECK(ClippingSpec::builtin_p(1e-3) == Catch::Approx(1.0).margin(1e-15));
  CHECK(ClippingSpec::builtin_p_prime(1e-3) ==
        Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("p derivatives agree with finite differences")
{
  const double eps = 1e-6;
  for (double t : {0.1, 0.45, 0.9, 1.3, 1.7, 1.95}) {
    const double fd1 = (ClippingSpec::builtin_p(t + eps) -
                        ClippingSpec::builtin_p(t - eps)) /
                       (2.0 * eps);
    CHECK(ClippingSpec::builtin_p_prime(t) ==
          Catch::Approx(fd1).margin(1e-7));
    const double fd2 =
        (ClippingSpec::builtin_p(t + eps) - 2.0 * ClippingSpec::builtin_p(t) +
         ClippingSpec::builtin_p(t - eps)) /
        (eps * eps);
    CHECK(ClippingSpec::builtin_p_second(t) ==
          Catch::Approx(fd2).margin(1e-3));
  }
}

TEST_CASE("alpha: exact square root above the threshold, floor below")
{
  const ClippingSpec clip(0.3);
  // s >= 2 c^2 = 0.18 -> alpha(s) = sqrt(s) exactly
  for (double s : {0.18, 0.25, 0.5, 1.0, 7.0})
    CHECK(clip.alpha(s) == Catch::Approx(std::sqrt(s)).epsilon(1e-15));
  // s <= 0 -> alpha = c
  CHECK(clip.alpha(0.0) == Catch::Approx(0.3).epsilon(1e-15));
  CHECK(clip.alpha(-1.0) == Catch::Approx(0.3).epsilon(1e-15));
  // in between alpha is bounded by the floor and monotone nondecreasing
  double prev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double s = 0.18 * static_cast<double>(i) / 200.0;
    const double a = clip.alpha(s);
    CHECK(a >= 0.3 - 1e-15);
    CHECK(a >= prev - 1e-15);
    prev = a;
  }
}

TEST_CASE("alpha derivatives agree with finite differences")
{
  const ClippingSpec clip(0.7);
  const double eps = 1e-6;
  for (double s : {0.05, 0.3, 0.6, 0.9, 1.5, 3.0}) {
    const double fd1 = (clip.alpha(s + eps) - clip.alpha(s - eps)) / (2 * eps);
    CHECK(clip.alpha_prime(s) == Catch::Approx(fd1).margin(1e-7));
    const double fd2 =
        (clip.alpha(s + eps) - 2 * clip.alpha(s) + clip.alpha(s - eps)) /
        (eps * eps);
    CHECK(clip.alpha_second(s) == Catch::Approx(fd2).margin(1e-3));
  }
  // above threshold: alpha' = 1/(2 sqrt(s)) exactly
  CHECK(clip.alpha_prime(2.0) ==
        Catch::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("alpha^d helpers")
{
  const ClippingSpec clip(0.4);
  for (int d : {1, 2}) {
    for (double s : {0.1, 0.5, 2.0}) {
      CHECK(clip.alpha_pow_d(s, d) ==
            Catch::Approx(std::pow(clip.alpha(s), d)).epsilon(1e-14));
      const double eps = 1e-6;
      const double fd =
          (clip.alpha_pow_d(s + eps, d) - clip.alpha_pow_d(s - eps, d)) /
          (2 * eps);
      CHECK(clip.alpha_pow_d_prime(s, d) == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("custom clipping functions are validated")
{
  const auto one = [](double) { return 1.0; };
  const auto zero = [](double) { return 0.0; };
  // valid: the builtin functions passed explicitly
  CHECK_NOTHROW(ClippingSpec(0.5, 2.0, &ClippingSpec::builtin_p,
                             &ClippingSpec::builtin_p_prime,
                             &ClippingSpec::builtin_p_second));
  // p(t) = max(1, t) has a kink at the join: p' jumps, rejected
  const auto pmax = [](double t) { return t >= 1.0 ? t : 1.0; };
  const auto pmax_p = [](double t) { return t >= 1.0 ? 1.0 : 0.0; };
  CHECK_THROWS_AS(ClippingSpec(0.5, 1.0, pmax, pmax_p, zero),
                  std::invalid_argument);
  // p dropping below 1 is rejected
  const auto bad_low = [](double t) { return t >= 1.0 ? t : 0.5; };
  CHECK_THROWS_AS(ClippingSpec(0.5, 1.0, bad_low, pmax_p, zero),
                  std::invalid_argument);
  // p != t beyond t0 is rejected
  CHECK_THROWS_AS(ClippingSpec(0.5, 1.0, one, zero, zero),
                  std::invalid_argument);
  // c <= 0 rejected
  CHECK_THROWS_AS(ClippingSpec(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ClippingSpec(-1.0), std::invalid_argument);
}

TEST_CASE("data-driven clipping constant")
{
  // ten pilot values 0.1..1.0: the 5% interpolated quantile is 0.145
  std::vector<double> pilot;
  for (int i = 1; i <= 10; ++i)
    pilot.push_back(0.1 * i);
  CHECK(auto_clipping_constant(pilot) ==
        Catch::Approx(std::sqrt(0.145 / 2.0)).epsilon(1e-14));
  // order must not matter
  std::reverse(pilot.begin(), pilot.end());
  CHECK(auto_clipping_constant(pilot) ==
        Catch::Approx(std::sqrt(0.145 / 2.0)).epsilon(1e-14));
  // nonpositive quantile -> domain error
  std::vector<double> bad(20, 0.0);
  CHECK_THROWS_AS(auto_clipping_constant(bad), std::domain_error);
  CHECK_THROWS_AS(auto_clipping_constant(std::vector<double>{}),
                  std::invalid_argument);
}
