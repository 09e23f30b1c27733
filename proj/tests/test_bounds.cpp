#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "squint/bounds.hpp"

using namespace squint;
using namespace squint::bounds;

namespace {
long double lnp(long double x) { return std::log(std::max(x, 1.0L)); }
}  // namespace

TEST_CASE("subset aggregation") {
  ExpertGameState s(std::vector<double>{0.25, 0.75});
  s.R = {4.0, 0.0};
  s.V = {2.0, 6.0};
  const std::vector<std::size_t> both{1, 0};
  const auto a = aggregate_subset(s, both);
  CHECK(a.R == doctest::Approx(1.0));
  CHECK(a.V == doctest::Approx(5.0));
  CHECK(a.pi_mass == doctest::Approx(1.0));
  const std::vector<std::size_t> one{0};
  CHECK(aggregate_subset(s, one).R == 4.0);
  CHECK_THROWS(aggregate_subset(s, std::vector<std::size_t>{}));
  CHECK_THROWS(aggregate_subset(s, std::vector<std::size_t>{0, 0}));
  CHECK_THROWS(aggregate_subset(s, std::vector<std::size_t>{2}));
}

TEST_CASE("normalizer") {
  CHECK(conjugate_normalizer(0, 0) == 0.5);
  const double z = conjugate_normalizer(1.0, 2.0);
  const long double ref = oracle::simpson([](long double e) { return std::exp(e - 2 * e * e); }, 0.0L, 0.5L);
  CHECK(std::abs(z - static_cast<double>(ref)) <= 1e-12);
}

TEST_CASE("conjugate-prior bound") {
  CHECK(bound_conjugate(0.0, 1.0) == doctest::Approx(5.0 * std::log(std::sqrt(5.0))).epsilon(1e-14));
  const long double V = 100, pi = 0.1, Z = 0.5L;
  const long double ref = 2 * std::sqrt(V * (0.5L + lnp(Z * std::sqrt(2 * V) / pi))) + 5 * lnp(2 * std::sqrt(5.0L) * Z / pi);
  CHECK(bound_conjugate(100.0, 0.1) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
  CHECK_THROWS(bound_conjugate(1.0, 0.0));
  CHECK_THROWS(bound_conjugate(1.0, 1.5));
}

TEST_CASE("CV-prior bound") {
  CHECK(bound_cv(0.0, 1.0) == doctest::Approx(4.0));
  CHECK(bound_cv(0.0, 0.2) == doctest::Approx(-5.0 * std::log(0.2) + 4.0));
  const long double V = 1000, pi = 0.05;
  const long double inner = lnp(2 * std::sqrt(V) / (2 - std::sqrt(2.0L)));
  const long double ref = std::sqrt(2 * V) * (1 + std::sqrt(2 * lnp(inner * inner / (pi * std::log(2.0L))))) - 5 * std::log(pi) + 4;
  CHECK(bound_cv(1000.0, 0.05) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
}

TEST_CASE("improper-prior bound") {
  CHECK(bound_improper(0.0, 1.0, 0) == doctest::Approx(5.0 * std::log(2.0)));
  CHECK(bound_improper(0.0, 0.5, 99) == doctest::Approx(5.0 * std::log1p((1 + 2 * std::log(100.0)) / 0.5)));
  const long double V = 500, pi = 0.2, T = 1e4;
  const long double lt = std::log(T + 1);
  const long double ref = std::sqrt(2 * V) * (1 + std::sqrt(2 * std::log((0.5L + lt) / pi))) + 5 * std::log(1 + (1 + 2 * lt) / pi);
  CHECK(bound_improper(500.0, 0.2, 10000) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
}

TEST_CASE("discretized and grid bounds") {
  CHECK(bound_component_slice(4.0, 1.0, 1, 1.0, 1.0) == doctest::Approx(2.0 * std::sqrt(4.0)));
  CHECK(bound_component_slice(1.0, 1.0, 1, 0.5, 1.0) == doctest::Approx(4.0 / std::sqrt(3.0)));
  CHECK(bound_component_slice(0.0, 3.0, 2, 0.7, 0.3) == 0.0);
  CHECK_THROWS(bound_component_slice(1.0, 1.0, 1, 2.0, 1.0));
  CHECK(grid_size(1) == 1);
  CHECK(grid_size(2) == 2);
  CHECK(grid_size(8) == 4);
  CHECK(grid_size(9) == 5);
  CHECK_THROWS(grid_size(0));
  CHECK(bound_component(9.0, 2.0, 3, 1) == doctest::Approx(4.0 / std::sqrt(3.0) * std::sqrt(18.0) + 8.0 + 3.0));
  CHECK(bound_component(0.0, 0.0, 5, 1024) == doctest::Approx(5 * 4 * std::log(11.0)));
  const long double lg = std::log(11.0L);
  const long double ref = 4 / std::sqrt(3.0L) * std::sqrt(200 * (3 + 10 * lg)) + 12 + 10 * std::max(4 * lg, 1.0L);
  CHECK(bound_component(200.0, 3.0, 10, 1024) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
}

TEST_CASE("bounds are monotone in V and pi_mass") {
  for (double pi : {0.01, 0.3, 1.0}) {
    double p1 = -1e300, p2 = -1e300, p3 = -1e300, p4 = -1e300;
    for (double V = 0; V <= 2000; V += 7.5) {
      const double b1 = bound_conjugate(V, pi), b2 = bound_cv(V, pi), b3 = bound_improper(V, pi, 1000);
      const double b4 = bound_component(V, -std::log(pi), 4, 1000);
      CHECK(b1 >= p1);
      CHECK(b2 >= p2);
      CHECK(b3 >= p3);
      CHECK(b4 >= p4);
      p1 = b1, p2 = b2, p3 = b3, p4 = b4;
      CHECK(bound_conjugate(V, pi) >= bound_conjugate(V, std::min(1.0, pi * 1.5)));
      CHECK(bound_cv(V, pi) >= bound_cv(V, std::min(1.0, pi * 1.5)));
      CHECK(bound_improper(V, pi, 50) >= bound_improper(V, std::min(1.0, pi * 1.5), 50));
    }
  }
}

TEST_CASE("binary relative entropy") {
  const std::vector<double> u{0.2, 0.5, 0.9};
  CHECK(binary_relative_entropy(u, u) == 0.0);
  CHECK(binary_relative_entropy(1.0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(binary_relative_entropy(1.0, 0.0)));
  CHECK(binary_relative_entropy(0.0, 0.0) == 0.0);
  oracle::Draws draw(4);
  std::vector<double> v(5), w(5);
  long double ref = 0;
  for (int k = 0; k < 5; ++k) {
    v[k] = draw();
    w[k] = draw(0.01, 0.99);
    ref += oracle::binary_kl(v[k], w[k]);
  }
  CHECK(binary_relative_entropy(v, w) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
  CHECK(binary_relative_entropy(v, w) > 0.0);
}
