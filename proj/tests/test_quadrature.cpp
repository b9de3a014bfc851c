#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <vkde/quadrature.hpp>

using namespace vkde;

TEST_CASE("Gauss-Legendre nodes are symmetric and weights sum to 2")
{
  for (int n : {2, 8, 16, 64}) {
    const auto rule = quad::gauss_legendre(static_cast<std::size_t>(n));
    REQUIRE(rule.nodes.size() == static_cast<std::size_t>(n));
    double wsum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      wsum += rule.weights[i];
      CHECK(rule.nodes[i] ==
            Catch::Approx(-rule.nodes[rule.nodes.size() - 1 - i]).margin(1e-14));
      CHECK(rule.weights[i] ==
            Catch::Approx(rule.weights[rule.nodes.size() - 1 - i])
                .margin(1e-14));
    }
    CHECK(wsum == Catch::Approx(2.0).margin(1e-13));
  }
}

TEST_CASE("quadrature integrates polynomials exactly")
{
  // degree-9 polynomial over [-2, 3]: exact antiderivative comparison
  const auto f = [](double x) {
    return ((((x - 1.0) * x + 2.0) * x - 0.5) * x + 3.0) * x * x * x - 7.0;
  };
  const auto F = [](double x) {
    // antiderivative of x^7 - x^6 + 2 x^5 - 0.5 x^4 + 3 x^3 - 7
    return std::pow(x, 8) / 8.0 - std::pow(x, 7) / 7.0 + std::pow(x, 6) / 3.0 -
           0.1 * std::pow(x, 5) + 0.75 * std::pow(x, 4) - 7.0 * x;
  };
  const double got = quad::integrate(f, -2.0, 3.0);
  CHECK(got == Catch::Approx(F(3.0) - F(-2.0)).epsilon(1e-14));
}

TEST_CASE("quadrature handles smooth non-polynomial integrands")
{
  const double got =
      quad::integrate([](double x) { return std::exp(-x * x); }, -6.0, 6.0, 16);
  CHECK(got == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("2-D box quadrature matches product structure")
{
  // +-6 keeps the domain-truncation deficit (2 erfc(6) ~ 4e-17) below the
  // tolerance; at +-5 it would already be 3e-12.
  const double got = quad::integrate_box(
      [](double x, double y) { return std::exp(-(x * x + y * y)); }, -6.0, 6.0,
      -6.0, 6.0, 8);
  CHECK(got == Catch::Approx(M_PI).epsilon(1e-12));
}

TEST_CASE("degenerate and reversed intervals")
{
  CHECK(quad::integrate([](double) { return 1.0; }, 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(quad::integrate([](double) { return 1.0; }, 2.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(quad::gauss_legendre(0), std::invalid_argument);
}
