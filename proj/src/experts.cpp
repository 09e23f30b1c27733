#include "squint/experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace squint {

namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kWeightSimplexTol = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_probability_vector(std::span<const double> p, double tol, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty vector");
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": entries must be finite and nonnegative");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw std::invalid_argument(std::string(what) + ": entries must sum to 1");
  }
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Maximum of eta x - eta^2 y over [0, 1/2].
double peak_exponent(double x, double y) {
  double best = std::max(0.0, 0.5 * x - 0.25 * y);
  if (y > 0.0) {
    const double eta = std::clamp(x / (2.0 * y), 0.0, 0.5);
    best = std::max(best, eta * x - eta * eta * y);
  }
  return best;
}

numerics::QuadratureSpec relative_quadrature() {
  numerics::QuadratureSpec spec;
  spec.abs_tol = std::numeric_limits<double>::min();
  spec.rel_tol = 1e-12;
  return spec;
}

// log int_0^{1/2} eta^p e^{eta x - eta^2 y} by shifted quadrature, p in {0, 1}.
double log_integral_by_quadrature(double x, double y, int power, bool smooth) {
  const double shift = peak_exponent(x, y);
  auto integrand = [=](double eta) {
    const double e = std::exp(eta * x - eta * eta * y - shift);
    return power == 1 ? eta * e : e;
  };
  const double value = smooth ? numerics::integrate_gauss_legendre(integrand, 0.0, 0.5)
                              : numerics::integrate_adaptive(integrand, relative_quadrature()).value;
  return shift + std::log(value);
}

template <class LogWeight>
std::vector<double> weights_from_log(const ExpertGameState& state, LogWeight&& log_weight) {
  std::vector<double> lw(state.experts());
  for (std::size_t k = 0; k < lw.size(); ++k) {
    lw[k] = state.prior[k] > 0.0 ? std::log(state.prior[k]) + log_weight(k) : kNegInf;
  }
  return numerics::normalize_log_weights(lw);
}

}  // namespace

ExpertGameState::ExpertGameState(std::vector<double> prior_pi)
    : prior(std::move(prior_pi)), R(prior.size(), 0.0), V(prior.size(), 0.0) {
  require_probability_vector(prior, kSimplexTol, "prior");
}

ExpertGameState ExpertGameState::uniform(std::size_t experts) {
  if (experts == 0) throw std::invalid_argument("prior: need at least one expert");
  return ExpertGameState(std::vector<double>(experts, 1.0 / static_cast<double>(experts)));
}

std::vector<double> ExpertGameState::apply(std::span<const double> weights,
                                           std::span<const double> losses) {
  const std::size_t K = experts();
  if (weights.size() != K || losses.size() != K) {
    throw std::invalid_argument("update: dimension mismatch");
  }
  require_probability_vector(weights, kWeightSimplexTol, "weights");
  for (double l : losses) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("update: loss outside [0, 1]");
  }
  double mixture = 0.0;
  for (std::size_t k = 0; k < K; ++k) mixture += weights[k] * losses[k];
  std::vector<double> r(K);
  for (std::size_t k = 0; k < K; ++k) {
    r[k] = mixture - losses[k];
    R[k] += r[k];
    V[k] += r[k] * r[k];
  }
  ++t;
  return r;
}

void ExpertGameState::validate() const {
  require_probability_vector(prior, kSimplexTol, "prior");
  if (R.size() != prior.size() || V.size() != prior.size()) {
    throw std::invalid_argument("state: R, V and prior sizes differ");
  }
  const double rounds = static_cast<double>(t);
  for (std::size_t k = 0; k < prior.size(); ++k) {
    if (!(V[k] >= 0.0) || V[k] > rounds * (1.0 + 1e-12)) {
      throw std::invalid_argument("state: V out of range [0, t]");
    }
    if (std::abs(R[k]) > rounds * (1.0 + 1e-12)) {
      throw std::invalid_argument("state: R out of range [-t, t]");
    }
  }
}

ExpertGameState update(ExpertGameState state, std::span<const double> weights,
                       std::span<const double> losses) {
  state.apply(weights, losses);
  return state;
}

DiscreteGridPrior DiscreteGridPrior::exponential(std::size_t points) {
  if (points == 0) throw std::invalid_argument("grid prior: need at least one point");
  DiscreteGridPrior g;
  for (std::size_t i = 1; i <= points; ++i) {
    g.etas.push_back(std::ldexp(1.0, -static_cast<int>(i)));
    g.masses.push_back(1.0 / static_cast<double>(points));
  }
  return g;
}

void DiscreteGridPrior::validate() const {
  if (etas.empty() || etas.size() != masses.size()) {
    throw std::invalid_argument("grid prior: etas and masses must be nonempty and of equal size");
  }
  for (std::size_t j = 0; j < etas.size(); ++j) {
    if (!(etas[j] > 0.0 && etas[j] <= 0.5)) {
      throw std::invalid_argument("grid prior: etas must lie in (0, 1/2]");
    }
    if (j > 0 && !(etas[j] < etas[j - 1])) {
      throw std::invalid_argument("grid prior: etas must be strictly decreasing");
    }
  }
  require_probability_vector(masses, kSimplexTol, "grid prior masses");
}

numerics::QuadratureSpec default_quadrature() { return numerics::QuadratureSpec{}; }

namespace detail {

double log_plain_integral(double x, double y) {
  if (y > 0.0) return numerics::log_xi({x, y});
  if (y == 0.0) {
    if (x == 0.0) return std::log(0.5);
    if (x > 0.0) return 0.5 * x + std::log(-std::expm1(-0.5 * x)) - std::log(x);
    return std::log(std::expm1(0.5 * x) / x);
  }
  return log_integral_by_quadrature(x, y, 0, false);
}

double log_eta_moment(double x, double y) {
  if (y == 0.0) {
    if (std::abs(x) < 1.0) return log_integral_by_quadrature(x, 0.0, 1, true);
    // int_0^{1/2} eta e^{eta x} = (e^{x/2}(x/2 - 1) + 1) / x^2
    if (x > 0.0) return 0.5 * x + std::log(0.5 * x - 1.0 + std::exp(-0.5 * x)) - 2.0 * std::log(x);
    return std::log(std::exp(0.5 * x) * (0.5 * x - 1.0) + 1.0) - 2.0 * std::log(-x);
  }
  if (y > 0.0 && numerics::in_stability_window(x, y)) {
    if (y < 1e-2) return log_integral_by_quadrature(x, y, 1, true);
    // (x xi + 1 - e^{x/2 - y/4}) / (2y), evaluated with a common shift.
    const double lx = numerics::log_xi({x, y});
    const double c = 0.5 * x - 0.25 * y;
    const double first_log = x != 0.0 ? lx + std::log(std::abs(x)) : kNegInf;
    const double shift = std::max({first_log, c, 0.0});
    const double first = x != 0.0 ? std::copysign(std::exp(first_log - shift), x) : 0.0;
    const double second = std::exp(-shift);
    const double third = std::exp(c - shift);
    const double bracket = first + second - third;
    const double scale = std::max({std::abs(first), second, third});
    if (bracket > 1e-8 * scale) return shift + std::log(bracket) - std::log(2.0 * y);
  }
  return log_integral_by_quadrature(x, y, 1, false);
}

}  // namespace detail

std::vector<double> squint_weights_conjugate(const ExpertGameState& state, double a, double b) {
  return weights_from_log(state, [&](std::size_t k) {
    return detail::log_eta_moment(a + state.R[k], b + state.V[k]);
  });
}

std::vector<double> squint_weights_improper(const ExpertGameState& state) {
  return weights_from_log(state, [&](std::size_t k) {
    return detail::log_plain_integral(state.R[k], state.V[k]);
  });
}

std::vector<double> squint_weights_cv(const ExpertGameState& state,
                                      const numerics::QuadratureSpec& spec) {
  if (spec.abs_tol > 1e-10) throw std::invalid_argument("squint_weights_cv: abs_tol must be <= 1e-10");
  return weights_from_log(state, [&](std::size_t k) {
    const double R = state.R[k];
    const double V = state.V[k];
    const double shift = peak_exponent(R, V);
    numerics::QuadratureSpec s = spec;
    s.lower = 0.0;
    s.upper = 0.5;
    const auto result = numerics::integrate_adaptive(
        [=](double eta) {
          if (eta <= 0.0) return 0.0;
          const double l = std::log(eta);
          return std::exp(eta * R - eta * eta * V - shift) / (l * l);
        },
        s);
    return shift + std::log(result.value);
  });
}

std::vector<double> squint_weights_grid(const ExpertGameState& state, const DiscreteGridPrior& prior) {
  prior.validate();
  std::vector<double> terms(prior.etas.size());
  return weights_from_log(state, [&](std::size_t k) {
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const double eta = prior.etas[j];
      terms[j] = safe_log(prior.masses[j]) + std::log(eta) + eta * state.R[k] -
                 eta * eta * state.V[k];
    }
    return numerics::log_sum_exp(terms);
  });
}

std::vector<double> squint_weights(const ExpertGameState& state, const LearningRatePrior& prior) {
  struct Visitor {
    const ExpertGameState& s;
    std::vector<double> operator()(const ConjugatePrior& p) const {
      return squint_weights_conjugate(s, p.a, p.b);
    }
    std::vector<double> operator()(const CVPrior&) const { return squint_weights_cv(s); }
    std::vector<double> operator()(const ImproperPrior&) const { return squint_weights_improper(s); }
    std::vector<double> operator()(const DiscreteGridPrior& p) const {
      return squint_weights_grid(s, p);
    }
  };
  return std::visit(Visitor{state}, prior);
}

IProdAccumulator::IProdAccumulator(std::vector<double> prior_pi, DiscreteGridPrior grid)
    : prior_(std::move(prior_pi)), grid_(std::move(grid)) {
  require_probability_vector(prior_, kSimplexTol, "prior");
  grid_.validate();
  log_products_.assign(prior_.size() * grid_.etas.size(), 0.0);
}

void IProdAccumulator::add(std::span<const double> regrets) {
  if (regrets.size() != prior_.size()) throw std::invalid_argument("iprod: dimension mismatch");
  const std::size_t J = grid_.etas.size();
  for (std::size_t k = 0; k < prior_.size(); ++k) {
    for (std::size_t j = 0; j < J; ++j) {
      const double step = grid_.etas[j] * regrets[k];
      if (!(step > -1.0)) throw std::domain_error("iprod: nonpositive product factor");
      log_products_[k * J + j] += std::log1p(step);
    }
  }
  ++rounds_;
}

std::vector<double> IProdAccumulator::weights() const {
  const std::size_t J = grid_.etas.size();
  std::vector<double> lw(prior_.size());
  std::vector<double> terms(J);
  for (std::size_t k = 0; k < prior_.size(); ++k) {
    for (std::size_t j = 0; j < J; ++j) {
      terms[j] = safe_log(grid_.masses[j]) + std::log(grid_.etas[j]) + log_products_[k * J + j];
    }
    lw[k] = safe_log(prior_[k]) + numerics::log_sum_exp(terms);
  }
  return numerics::normalize_log_weights(lw);
}

double IProdAccumulator::potential() const {
  const std::size_t J = grid_.etas.size();
  double phi = 0.0;
  for (std::size_t k = 0; k < prior_.size(); ++k) {
    double inner = 0.0;
    for (std::size_t j = 0; j < J; ++j) inner += grid_.masses[j] * std::expm1(log_products_[k * J + j]);
    phi += prior_[k] * inner;
  }
  return phi;
}

std::vector<double> iprod_weights_grid(std::span<const std::vector<double>> history,
                                       std::span<const double> prior_pi,
                                       const DiscreteGridPrior& prior) {
  IProdAccumulator acc(std::vector<double>(prior_pi.begin(), prior_pi.end()), prior);
  for (const auto& r : history) acc.add(r);
  return acc.weights();
}

std::vector<double> hedge_weights(std::span<const double> cumulative_losses,
                                  std::span<const double> prior_pi, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("hedge: eta must be positive");
  if (cumulative_losses.size() != prior_pi.size()) throw std::invalid_argument("hedge: dimension mismatch");
  require_probability_vector(prior_pi, kSimplexTol, "prior");
  std::vector<double> lw(prior_pi.size());
  for (std::size_t k = 0; k < lw.size(); ++k) lw[k] = safe_log(prior_pi[k]) - eta * cumulative_losses[k];
  return numerics::normalize_log_weights(lw);
}

double potential(const ExpertGameState& state, const LearningRatePrior& prior,
                 const numerics::QuadratureSpec& spec) {
  const std::size_t K = state.experts();
  numerics::QuadratureSpec s = spec;
  s.lower = 0.0;
  s.upper = 0.5;
  double phi = 0.0;

  if (const auto* conj = std::get_if<ConjugatePrior>(&prior)) {
    const double log_z = detail::log_plain_integral(conj->a, conj->b);
    for (std::size_t k = 0; k < K; ++k) {
      const double log_i = detail::log_plain_integral(conj->a + state.R[k], conj->b + state.V[k]);
      phi += state.prior[k] * std::expm1(log_i - log_z);
    }
    return phi;
  }
  if (const auto* grid = std::get_if<DiscreteGridPrior>(&prior)) {
    grid->validate();
    for (std::size_t k = 0; k < K; ++k) {
      double inner = 0.0;
      for (std::size_t j = 0; j < grid->etas.size(); ++j) {
        const double eta = grid->etas[j];
        inner += grid->masses[j] * std::expm1(eta * state.R[k] - eta * eta * state.V[k]);
      }
      phi += state.prior[k] * inner;
    }
    return phi;
  }
  const bool cv = std::holds_alternative<CVPrior>(prior);
  for (std::size_t k = 0; k < K; ++k) {
    const double R = state.R[k];
    const double V = state.V[k];
    if (R == 0.0 && V == 0.0) continue;
    const auto result = numerics::integrate_adaptive(
        [=](double eta) {
          // (e^{eta R - eta^2 V} - 1)/eta -> R at eta = 0
          const double core = eta > 0.0 ? std::expm1(eta * R - eta * eta * V) / eta : R;
          if (!cv) return core;
          if (eta <= 0.0) return 0.0;
          const double l = std::log(eta);
          return core * std::numbers::ln2 / (l * l);
        },
        s);
    phi += state.prior[k] * result.value;
  }
  return phi;
}

}  // namespace squint
