#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "squint/numerics.hpp"

using namespace squint::numerics;

TEST_CASE("erf: symmetry, asymptote and series agreement") {
  CHECK(squint::numerics::erf(0.0) == 0.0);
  CHECK(std::abs(squint::numerics::erf(6.0) - 1.0) <= 1e-14);
  CHECK(std::abs(squint::numerics::erf(1.0) - static_cast<double>(oracle::erf_series(1.0L))) <= 1e-13);
  for (double x = -3.0; x <= 3.0; x += 0.0625) {
    CHECK(squint::numerics::erf(-x) == -squint::numerics::erf(x));
    CHECK(std::abs(squint::numerics::erf(x) - static_cast<double>(oracle::erf_series(x, 120))) <= 1e-14);
  }
}

TEST_CASE("erfcx matches exp(x^2) erfc(x) where the latter is representable") {
  for (double x = -5.0; x <= 25.0; x += 0.25) {
    const long double ref = std::exp(static_cast<long double>(x) * x) * std::erfc(static_cast<long double>(x));
    CHECK(std::abs(erfcx(x) - static_cast<double>(ref)) <= 1e-13 * static_cast<double>(ref));
  }
}

TEST_CASE("xi against the Simpson oracle inside the window") {
  const double a = xi_stable({0.0, 1.0});
  CHECK(std::abs(a - static_cast<double>(oracle::squint_integral(0.0, 1.0, 0))) <= 1e-10);
  const double b = xi_stable({1.0, 1.0});
  CHECK(std::abs(b - static_cast<double>(oracle::squint_integral(1.0, 1.0, 0))) <= 1e-10);
}

TEST_CASE("xi far outside the window stays finite on the log scale") {
  // The integral itself overflows a double at R = 1e6.
  const double lx = log_xi({1e6, 1.0});
  REQUIRE(std::isfinite(lx));
  const long double ref = oracle::log_simpson([](long double e) { return e * 1e6L - e * e; }, 0.0L, 0.5L, 2000000);
  CHECK(std::abs(lx - static_cast<double>(ref)) <= 1e-3);
  CHECK(std::isinf(xi_stable({1e6, 1.0})));
  CHECK(xi_stable({1e3, 1.0}) > 0.0);
}

TEST_CASE("xi is positive and continuous across the window boundary") {
  for (double V : {1.0, 10.0, 100.0}) {
    const double edge = V + 12.0 * std::sqrt(V);
    CHECK(in_stability_window(edge, V));
    CHECK_FALSE(in_stability_window(std::nextafter(edge, 1e300), V));
    const double inside = log_xi({edge, V});
    const double outside = log_xi({std::nextafter(edge, 1e300), V});
    CHECK(std::abs(std::expm1(outside - inside)) <= 1e-3);
  }
  for (double R : {-1e4, -50.0, -1.0, 0.0, 3.0, 1e4}) {
    for (double V : {1e-3, 0.5, 7.0, 1e6}) CHECK(log_xi({R, V}) > -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("second-order expansion is a diagnostic that is close only far out") {
  const double V = 1.0, R = 200.0;
  const double rel = std::abs(std::expm1(log_xi_taylor_second_order({R, V}) - log_xi({R, V})));
  CHECK(rel < 1e-2);
}

TEST_CASE("adaptive quadrature basics") {
  QuadratureSpec spec;
  CHECK(integrate_adaptive([](double) { return 1.0; }, spec).value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(integrate_adaptive([](double e) { return e; }, spec).value == doctest::Approx(0.125).epsilon(1e-15));
  const double q = integrate_adaptive([](double e) { return std::exp(e - e * e); }, spec).value;
  const long double ref = oracle::simpson([](long double e) { return std::exp(e - e * e); }, 0.0L, 0.5L);
  CHECK(std::abs(q - static_cast<double>(ref)) <= spec.abs_tol);
}

TEST_CASE("adaptive quadrature reports failures") {
  QuadratureSpec spec;
  spec.max_subdivisions = 3;
  spec.abs_tol = 1e-300;
  spec.rel_tol = 1e-300;
  CHECK_THROWS_AS(integrate_adaptive([](double e) { return std::sqrt(e); }, spec), QuadratureError);
  QuadratureSpec bad;
  bad.lower = 1.0;
  bad.upper = 0.0;
  CHECK_THROWS(bad.validate());
  CHECK_THROWS_AS(integrate_adaptive([](double) { return std::nan(""); }, QuadratureSpec{}), QuadratureError);
}

TEST_CASE("log-domain normalization") {
  const std::vector<double> lw{1000.0, 1000.0 + std::log(3.0)};
  const auto w = normalize_log_weights(lw);
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.75));
  const std::vector<double> none{-INFINITY, -INFINITY};
  CHECK_THROWS(normalize_log_weights(none));
  CHECK(log_sum_exp(std::vector<double>{}) == -INFINITY);
}
