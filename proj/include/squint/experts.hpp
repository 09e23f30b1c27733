#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "squint/numerics.hpp"

namespace squint {

/// Sufficient statistics of the expert game: per-expert cumulative regret
/// R^k = sum_t r_t^k and uncentered variance V^k = sum_t (r_t^k)^2, with
/// r_t^k = w_t . l_t - l_t^k.
struct ExpertGameState {
  std::vector<double> prior;  // pi, on the simplex
  std::vector<double> R;
  std::vector<double> V;
  std::size_t t = 0;

  ExpertGameState() = default;
  explicit ExpertGameState(std::vector<double> prior_pi);

  static ExpertGameState uniform(std::size_t experts);

  std::size_t experts() const noexcept { return prior.size(); }

  /// Applies one round in place and returns the instantaneous regret vector.
  std::vector<double> apply(std::span<const double> weights, std::span<const double> losses);

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

/// Functional form of ExpertGameState::apply.
ExpertGameState update(ExpertGameState state, std::span<const double> weights,
                       std::span<const double> losses);

// Priors on the learning rate eta in [0, 1/2].

/// Density e^{a eta - b eta^2} / Z(a, b).
struct ConjugatePrior {
  double a = 0.0;
  double b = 0.0;
};

/// Chernov-Vovk density ln 2 / (eta ln^2 eta).
struct CVPrior {};

/// The improper density 1/eta.
struct ImproperPrior {};

/// Point masses at strictly decreasing etas in (0, 1/2].
struct DiscreteGridPrior {
  std::vector<double> etas;
  std::vector<double> masses;

  /// Uniform masses on eta_i = 2^{-i}, i = 1..points.
  static DiscreteGridPrior exponential(std::size_t points);

  void validate() const;
};

using LearningRatePrior = std::variant<ConjugatePrior, CVPrior, ImproperPrior, DiscreteGridPrior>;

/// Tolerances used for CV-prior weights and quadrature-backed potentials.
numerics::QuadratureSpec default_quadrature();

/// Squint with the conjugate prior. Uses the erf closed form for the eta-moment
/// inside the stability window and log-domain quadrature elsewhere.
std::vector<double> squint_weights_conjugate(const ExpertGameState& state, double a, double b);

/// Squint with the improper prior; w^k proportional to pi(k) xi(R^k, V^k).
std::vector<double> squint_weights_improper(const ExpertGameState& state);

/// Squint with the CV prior by adaptive quadrature. spec.abs_tol must be <= 1e-10.
std::vector<double> squint_weights_cv(const ExpertGameState& state,
                                      const numerics::QuadratureSpec& spec = default_quadrature());

std::vector<double> squint_weights_grid(const ExpertGameState& state, const DiscreteGridPrior& prior);

/// Dispatches on the prior.
std::vector<double> squint_weights(const ExpertGameState& state, const LearningRatePrior& prior);

/// Running log-products sum_t ln(1 + eta_j r_t^k) for iProd, one row per expert.
class IProdAccumulator {
 public:
  IProdAccumulator(std::vector<double> prior_pi, DiscreteGridPrior grid);

  void add(std::span<const double> regrets);
  std::vector<double> weights() const;
  /// sum_k pi(k) sum_j masses_j (prod_t (1 + eta_j r_t^k) - 1)
  double potential() const;
  std::size_t rounds() const noexcept { return rounds_; }

 private:
  std::vector<double> prior_;
  DiscreteGridPrior grid_;
  std::vector<double> log_products_;  // experts x grid, row major
  std::size_t rounds_ = 0;
};

/// iProd weights from the full regret history r_{1:T} (one vector per round).
std::vector<double> iprod_weights_grid(std::span<const std::vector<double>> history,
                                       std::span<const double> prior_pi,
                                       const DiscreteGridPrior& prior);

/// Hedge: w^k proportional to pi(k) e^{-eta L^k}.
std::vector<double> hedge_weights(std::span<const double> cumulative_losses,
                                  std::span<const double> prior_pi, double eta);

/// Squint potential Phi = E_{pi(k) gamma(eta)}[e^{eta R^k - eta^2 V^k} - 1]. For the
/// improper prior the integrand is (e^{eta R - eta^2 V} - 1)/eta. Diagnostic only.
double potential(const ExpertGameState& state, const LearningRatePrior& prior,
                 const numerics::QuadratureSpec& spec = default_quadrature());

namespace detail {
/// log int_0^{1/2} eta e^{eta x - eta^2 y} d eta, any real x, y.
double log_eta_moment(double x, double y);
/// log int_0^{1/2} e^{eta x - eta^2 y} d eta, any real x, y.
double log_plain_integral(double x, double y);
}  // namespace detail

}  // namespace squint
