#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>

#include <vkde/kernels.hpp>
#include <vkde/quadrature.hpp>

using namespace vkde;

// Closed-form moment values for the builtin kernels, obtained by expanding
// the integrands binomially and summing exact rationals:
//   tricube:  mu0 = 175/247, tau2 = 35/243, tau4 = 1/22,
//             mu2 = 9800/137781, int L^2 = 210/247
//   epanechnikov (d=1): mu0 = 3/5, tau2 = 1/5, tau4 = 3/35
//   biweight (d=1):     mu0 = 5/7, tau2 = 1/7, tau4 = 1/21
//   epanechnikov (d=2): mu0 = 4/(3 pi), tau_(2,0) = 1/6
//   biweight (d=2):     mu0 = 9/(5 pi), tau_(2,0) = 1/8

TEST_CASE("tricube point values")
{
  const Kernel k = Kernel::tricube();
  CHECK(k.name() == "tricube");
  CHECK(k.dim() == 1);
  CHECK(k.support_radius() == 1.0);
  CHECK(k(0.0) == Catch::Approx(70.0 / 81.0).epsilon(1e-15));
  // K(1/2) = (70/81)(7/8)^3 = 24010/41472
  CHECK(k(0.5) == Catch::Approx(24010.0 / 41472.0).epsilon(1e-15));
  CHECK(k(0.5) == Catch::Approx(0.57894483024691358).epsilon(1e-15));
  CHECK(k(-0.5) == k(0.5));
  CHECK(k(1.0) == 0.0);
  CHECK(k(2.0) == 0.0);
  CHECK(k(-1.5) == 0.0);
}

TEST_CASE("tricube gradient and second-order kernel")
{
  const Kernel k = Kernel::tricube();
  // K'(1/2) = -(630/81) u^2 (1-u^3)^2 at u=1/2 -> -30870/20736
  const double x = 0.5;
  const double grad = k.grad(std::span<const double>(&x, 1))[0];
  CHECK(grad == Catch::Approx(-30870.0 / 20736.0).epsilon(1e-14));
  CHECK(grad == Catch::Approx(-1.4887152777777778).epsilon(1e-14));
  // L(u) = K + u K' = (70/81)(1-u^3)^2 (1-10u^3); L(1/2) = -3430/20736
  CHECK(k.second_order(0.5) ==
        Catch::Approx(-3430.0 / 20736.0).epsilon(1e-14));
  CHECK(k.second_order(0.5) ==
        Catch::Approx(k(0.5) + 0.5 * grad).epsilon(1e-13));
  // outside support everything vanishes
  CHECK(k.second_order(1.5) == 0.0);
  const double far = 2.0;
  CHECK(k.grad(std::span<const double>(&far, 1))[0] == 0.0);
}

TEST_CASE("gradients match finite differences at interior points")
{
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (const char* name : {"tricube", "epanechnikov", "biweight"}) {
    const Kernel k = Kernel::from_name(name, 1);
    int tested = 0;
    while (tested < 100) {
      const double t = unif(gen);
      if (std::abs(std::abs(t) - k.support_radius()) < 1e-3 ||
          std::abs(t) < 1e-3)
        continue;
      ++tested;
      const double step = 1e-5;
      const double fd = (k(t + step) - k(t - step)) / (2.0 * step);
      const double an = k.grad(std::span<const double>(&t, 1))[0];
      CHECK_THAT(an, Catch::Matchers::WithinRel(fd, 2e-5) ||
                         Catch::Matchers::WithinAbs(fd, 1e-7));
    }
  }
}

TEST_CASE("2-D gradients match finite differences")
{
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (const char* name : {"epanechnikov", "biweight"}) {
    const Kernel k = Kernel::from_name(name, 2);
    int tested = 0;
    while (tested < 100) {
      std::array<double, 2> t = {unif(gen), unif(gen)};
      const double r = std::hypot(t[0], t[1]);
      if (r > k.support_radius() - 1e-3 || r < 1e-3)
        continue;
      ++tested;
      const auto grad = k.grad(std::span<const double>(t.data(), 2));
      for (int axis = 0; axis < 2; ++axis) {
        std::array<double, 2> tp = t, tm = t;
        tp[axis] += 1e-6;
        tm[axis] -= 1e-6;
        const double fd = (k.eval(std::span<const double>(tp.data(), 2)) -
                           k.eval(std::span<const double>(tm.data(), 2))) /
                          2e-6;
        CHECK_THAT(grad[axis], Catch::Matchers::WithinRel(fd, 5e-5) ||
                                   Catch::Matchers::WithinAbs(fd, 1e-6));
      }
    }
  }
}

TEST_CASE("tricube moments match the closed-form oracle")
{
  const KernelMoments m = compute_moments(Kernel::tricube());
  CHECK(m.tau1(0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(m.mu0 == Catch::Approx(175.0 / 247.0).margin(1e-10));
  CHECK(m.tau1(2) == Catch::Approx(35.0 / 243.0).margin(1e-10));
  CHECK(m.tau1(4) == Catch::Approx(1.0 / 22.0).margin(1e-10));
  CHECK(m.mu1(2) == Catch::Approx(9800.0 / 137781.0).margin(1e-10));
  CHECK(m.r_of_L == Catch::Approx(210.0 / 247.0).margin(1e-10));
}

TEST_CASE("one-dimensional moment oracles for the other kernels")
{
  const KernelMoments e = compute_moments(Kernel::epanechnikov(1));
  CHECK(e.tau1(0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(e.mu0 == Catch::Approx(0.6).margin(1e-10));
  CHECK(e.tau1(2) == Catch::Approx(0.2).margin(1e-10));
  CHECK(e.tau1(4) == Catch::Approx(3.0 / 35.0).margin(1e-10));

  const KernelMoments b = compute_moments(Kernel::biweight(1));
  CHECK(b.tau1(0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(b.mu0 == Catch::Approx(5.0 / 7.0).margin(1e-10));
  CHECK(b.tau1(2) == Catch::Approx(1.0 / 7.0).margin(1e-10));
  CHECK(b.tau1(4) == Catch::Approx(1.0 / 21.0).margin(1e-10));
}

TEST_CASE("two-dimensional moments")
{
  const KernelMoments e = compute_moments(Kernel::epanechnikov(2));
  CHECK(e.tau.at(MultiIndex{0, 0}) == Catch::Approx(1.0).margin(1e-10));
  CHECK(e.mu0 == Catch::Approx(4.0 / (3.0 * M_PI)).margin(1e-10));
  CHECK(e.tau.at(MultiIndex{2, 0}) == Catch::Approx(1.0 / 6.0).margin(1e-10));
  CHECK(e.tau.at(MultiIndex{0, 2}) == Catch::Approx(1.0 / 6.0).margin(1e-10));
  CHECK(e.tau.at(MultiIndex{1, 1}) == Catch::Approx(0.0).margin(1e-12));

  const KernelMoments b = compute_moments(Kernel::biweight(2));
  CHECK(b.tau.at(MultiIndex{0, 0}) == Catch::Approx(1.0).margin(1e-10));
  CHECK(b.mu0 == Catch::Approx(9.0 / (5.0 * M_PI)).margin(1e-10));
  CHECK(b.tau.at(MultiIndex{2, 0}) == Catch::Approx(1.0 / 8.0).margin(1e-10));
}

TEST_CASE("second-order kernel integrals vanish")
{
  for (const char* name : {"tricube", "epanechnikov", "biweight"}) {
    const Kernel k = Kernel::from_name(name, 1);
    const double int_L =
        quad::integrate([&](double u) { return k.second_order(u); }, -1.0, 1.0,
                        16);
    const double int_uL = quad::integrate(
        [&](double u) { return u * k.second_order(u); }, -1.0, 1.0, 16);
    CHECK(int_L == Catch::Approx(0.0).margin(1e-10));
    CHECK(int_uL == Catch::Approx(0.0).margin(1e-10));
  }
  // d=2: integral of L = d tau_0 + sum t_i dK/dt_i integrates to 0 as well
  const Kernel k2 = Kernel::biweight(2);
  const double int_L2d = kernel_box_integral(
      k2, MultiIndex{0, 0},
      [&](std::span<const double> t) { return k2.second_order(t); });
  // The 2-d integrand is only C^0 across the support circle, so the panel
  // rule converges more slowly than for the smooth moment integrands.
  CHECK(int_L2d == Catch::Approx(0.0).margin(2e-7));
}

TEST_CASE("kernel lookup")
{
  CHECK(Kernel::from_name("tricube").name() == "tricube");
  CHECK(Kernel::from_name("epanechnikov", 2).dim() == 2);
  CHECK_THROWS_AS(Kernel::from_name("gaussian"), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::from_name("tricube", 2), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::epanechnikov(3), std::invalid_argument);
  CHECK(Kernel::biweight(1).smooth_profile());
  CHECK_FALSE(Kernel::tricube().smooth_profile());
}
