#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "squint/experts.hpp"

using namespace squint;

namespace {

ExpertGameState state_with(std::vector<double> R, std::vector<double> V) {
  auto s = ExpertGameState::uniform(R.size());
  s.R = std::move(R);
  s.V = std::move(V);
  s.t = 100;
  return s;
}

void check_simplex(const std::vector<double>& w) {
  double sum = 0.0;
  for (double x : w) {
    CHECK(x >= 0.0);
    sum += x;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

std::vector<double> normalized(std::vector<long double> raw) {
  const long double s = std::accumulate(raw.begin(), raw.end(), 0.0L);
  std::vector<double> out;
  for (auto x : raw) out.push_back(static_cast<double>(x / s));
  return out;
}

}  // namespace

TEST_CASE("update arithmetic") {
  auto s = ExpertGameState::uniform(2);
  const std::vector<double> w{0.5, 0.5}, l{1.0, 0.0};
  const auto r = s.apply(w, l);
  CHECK(r[0] == -0.5);
  CHECK(r[1] == 0.5);
  CHECK(s.V[0] == 0.25);
  CHECK(s.V[1] == 0.25);
  const std::vector<double> same{0.3, 0.3};
  const auto before = s;
  s.apply(w, same);
  CHECK(s.R == before.R);
  CHECK(s.V == before.V);
  CHECK(s.t == 2);
  const std::vector<double> bad{1.5, 0.0};
  CHECK_THROWS(s.apply(w, bad));
  const std::vector<double> short_w{1.0};
  CHECK_THROWS(s.apply(short_w, l));
}

TEST_CASE("weighted regret vanishes every round") {
  oracle::Draws draw(11);
  auto s = ExpertGameState::uniform(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> w(4), l(4);
    for (auto& x : w) x = draw();
    const double tot = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= tot;
    for (auto& x : l) x = draw();
    const auto r = s.apply(w, l);
    CHECK(std::abs(std::inner_product(w.begin(), w.end(), r.begin(), 0.0)) <= 1e-15);
  }
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("prior validation") {
  CHECK_THROWS(ExpertGameState(std::vector<double>{0.5, 0.6}));
  CHECK_THROWS(ExpertGameState(std::vector<double>{-0.1, 1.1}));
  DiscreteGridPrior g{{0.25, 0.5}, {0.5, 0.5}};
  CHECK_THROWS(g.validate());
}

TEST_CASE("all priors return the prior at the start") {
  ExpertGameState s(std::vector<double>{0.1, 0.2, 0.7});
  for (const LearningRatePrior& p : std::vector<LearningRatePrior>{
           ConjugatePrior{}, CVPrior{}, ImproperPrior{}, DiscreteGridPrior::exponential(8)}) {
    const auto w = squint_weights(s, p);
    for (int k = 0; k < 3; ++k) CHECK(w[k] == doctest::Approx(s.prior[k]).epsilon(1e-12));
  }
  const auto h = hedge_weights(std::vector<double>{0, 0, 0}, s.prior, 1.0);
  CHECK(h[2] == doctest::Approx(0.7));
  const auto ip = iprod_weights_grid({}, s.prior, DiscreteGridPrior::exponential(4));
  CHECK(ip[1] == doctest::Approx(0.2));
}

TEST_CASE("conjugate weights against quadrature") {
  const auto s = state_with({1.0, -1.0}, {1.0, 1.0});
  const auto w = squint_weights_conjugate(s, 0.0, 0.0);
  const auto ref = normalized({oracle::squint_integral(1, 1, 1), oracle::squint_integral(-1, 1, 1)});
  for (int k = 0; k < 2; ++k) CHECK(std::abs(w[k] - ref[k]) <= 1e-8 * ref[k]);
  for (double x : {-40.0, -3.0, 0.0, 0.5, 9.0}) {
    for (double y : {0.0, 1e-3, 0.4, 5.0, 80.0}) {
      const double got = std::exp(detail::log_eta_moment(x, y));
      const long double ref1 = oracle::squint_integral(x, y, 1, 200000);
      CHECK(std::abs(got - static_cast<double>(ref1)) <= 1e-8 * static_cast<double>(ref1));
    }
  }
  check_simplex(squint_weights_conjugate(state_with({3, -2, 0.1}, {4, 9, 0}), 1.0, 2.0));
}

TEST_CASE("improper weights") {
  oracle::Draws draw(5);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> R(3), V(3);
    for (auto& x : R) x = draw(-5, 5);
    for (auto& x : V) x = draw(1, 10);
    const auto w = squint_weights_improper(state_with(R, V));
    std::vector<long double> raw;
    for (int k = 0; k < 3; ++k) raw.push_back(oracle::squint_integral(R[k], V[k], 0, 100000));
    const auto ref = normalized(raw);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(w[k] - ref[k]) <= 1e-6 * ref[k]);
  }
  // V = 0 and R = 0 gives exactly 1/2 before normalization.
  CHECK(std::exp(detail::log_plain_integral(0.0, 0.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::exp(detail::log_plain_integral(2.0, 0.0)) == doctest::Approx(std::expm1(1.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("CV weights against a finer quadrature") {
  const auto s = state_with({2.0, 0.0}, {2.0, 2.0});
  const auto w = squint_weights_cv(s);
  auto cv = [](double R, double V) {
    return oracle::simpson(
        [=](long double e) {
          if (e <= 0) return 0.0L;
          const long double l = std::log(e);
          return std::exp(e * R - e * e * V) / (l * l);
        },
        0.0L, 0.5L, 4000000);
  };
  const auto ref = normalized({cv(2, 2), cv(0, 2)});
  for (int k = 0; k < 2; ++k) CHECK(std::abs(w[k] - ref[k]) <= 1e-6 * ref[k]);
  CHECK(squint_weights_cv(ExpertGameState::uniform(1))[0] == 1.0);
  numerics::QuadratureSpec loose;
  loose.abs_tol = 1e-6;
  CHECK_THROWS(squint_weights_cv(s, loose));
}

TEST_CASE("grid weights") {
  DiscreteGridPrior one{{0.25}, {1.0}};
  const auto w = squint_weights_grid(state_with({1.0, 0.0}, {0.0, 0.0}), one);
  CHECK(w[0] / w[1] == doctest::Approx(std::exp(0.25)));
  const auto w2 = squint_weights_grid(state_with({1.0, -2.0}, {3.0, 1.0}), one);
  CHECK(w2[0] / w2[1] == doctest::Approx(std::exp(0.25 * 3.0 - 0.0625 * 2.0)));
  // A dense grid approaches the uniform conjugate prior.
  DiscreteGridPrior dense;
  const int n = 10000;
  for (int j = 0; j < n; ++j) {
    dense.etas.push_back(0.5 - (j + 0.5) * 0.5 / n);
    dense.masses.push_back(1.0 / n);
  }
  const auto s = state_with({4.0, -1.0, 0.5}, {6.0, 2.0, 1.0});
  const auto a = squint_weights_grid(s, dense);
  const auto b = squint_weights_conjugate(s, 0, 0);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-3);
}

TEST_CASE("iprod weights and potential") {
  DiscreteGridPrior one{{0.5}, {1.0}};
  const std::vector<double> prior{0.5, 0.5};
  const std::vector<std::vector<double>> hist{{0.4, -0.6}};
  const auto w = iprod_weights_grid(hist, prior, one);
  CHECK(w[0] / w[1] == doctest::Approx(1.2 / 0.7));
  oracle::Draws draw(9);
  auto grid = DiscreteGridPrior::exponential(6);
  IProdAccumulator acc(prior, grid);
  ExpertGameState s(prior);
  for (int t = 0; t < 300; ++t) {
    const auto wt = acc.weights();
    const std::vector<double> l{draw(), draw()};
    acc.add(s.apply(wt, l));
    CHECK(acc.potential() >= potential(s, grid) - 1e-12);
    CHECK(acc.potential() <= 1e-12);
  }
  const std::vector<std::vector<double>> impossible{{-3.0, 0.0}};
  CHECK_THROWS_AS(iprod_weights_grid(impossible, prior, one), std::domain_error);
}

TEST_CASE("hedge weights") {
  const auto w = hedge_weights(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}, 1.0);
  CHECK(w[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(w[1] == doctest::Approx(std::exp(-1.0) / (1.0 + std::exp(-1.0))));
  const auto eq = hedge_weights(std::vector<double>{7.0, 7.0}, std::vector<double>{0.3, 0.7}, 2.0);
  CHECK(eq[0] == doctest::Approx(0.3));
  CHECK_THROWS(hedge_weights(std::vector<double>{0.0}, std::vector<double>{1.0}, 0.0));
}

TEST_CASE("potential at the start and after play") {
  const auto s0 = ExpertGameState::uniform(3);
  for (const LearningRatePrior& p : std::vector<LearningRatePrior>{
           ConjugatePrior{}, CVPrior{}, ImproperPrior{}, DiscreteGridPrior::exponential(8)}) {
    CHECK(potential(s0, p) == 0.0);
    oracle::Draws draw(2);
    auto s = s0;
    for (int t = 0; t < 100; ++t) {
      const auto w = squint_weights(s, p);
      s.apply(w, std::vector<double>{draw(), draw(), draw()});
    }
    CHECK(potential(s, p) <= 1e-9);
  }
}

TEST_CASE("conjugate potential matches direct integration") {
  const auto s = state_with({2.0, -3.0}, {5.0, 4.0});
  const double phi = potential(s, ConjugatePrior{});
  long double ref = 0.0L;
  for (int k = 0; k < 2; ++k) ref += 0.5L * (oracle::squint_integral(s.R[k], s.V[k], 0) / 0.5L - 1.0L);
  CHECK(std::abs(phi - static_cast<double>(ref)) <= 1e-10);
}
