#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "squint/experts.hpp"

namespace squint::bounds {

/// Prior-conditional averages of regret and variance over a reference set of experts.
struct SubsetAggregate {
  std::vector<std::size_t> subset;
  double pi_mass = 0.0;
  double R = 0.0;
  double V = 0.0;
};

SubsetAggregate aggregate_subset(const ExpertGameState& state, std::span<const std::size_t> subset);

/// ln(max{x, 1})
double ln_plus(double x);

/// Z(a, b) = int_0^{1/2} e^{a eta - b eta^2} d eta; exactly 1/2 for a = b = 0.
double conjugate_normalizer(double a, double b);

/// Regret bound of Squint with the conjugate prior.
double bound_conjugate(double V, double pi_mass, double a = 0.0, double b = 0.0);

/// Regret bound of Squint with the CV prior.
double bound_cv(double V, double pi_mass);

/// Regret bound of Squint with the improper prior after T rounds.
double bound_improper(double V, double pi_mass, std::uint64_t T);

/// Bound for Component iProd when the grid point alpha * eta_hat carries prior mass gamma_mass.
double bound_component_slice(double V, double entropy, std::size_t K, double alpha, double gamma_mass);

/// ceil(1 + log2 T), the size of the exponential learning-rate grid for horizon T >= 1.
std::size_t grid_size(std::uint64_t T);

/// Regret bound of Component iProd with the uniform prior on the exponential grid for horizon T.
double bound_component(double V, double entropy, std::size_t K, std::uint64_t T);

/// Sum over coordinates of Bernoulli relative entropies; +inf when some u^k is on
/// the boundary and v^k differs from it.
double binary_relative_entropy(std::span<const double> v, std::span<const double> u);

/// Scalar form.
double binary_relative_entropy(double v, double u);

}  // namespace squint::bounds
