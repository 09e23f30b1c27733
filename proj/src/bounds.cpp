#include "squint/bounds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace squint::bounds {

namespace {

void require_pi_mass(double pi_mass) {
  if (!(pi_mass > 0.0 && pi_mass <= 1.0)) throw std::invalid_argument("bound: pi_mass must lie in (0, 1]");
}

void require_variance(double V) {
  if (!(V >= 0.0) || !std::isfinite(V)) throw std::invalid_argument("bound: V must be finite and >= 0");
}

}  // namespace

SubsetAggregate aggregate_subset(const ExpertGameState& state, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("aggregate_subset: empty subset");
  SubsetAggregate agg;
  agg.subset.assign(subset.begin(), subset.end());
  std::sort(agg.subset.begin(), agg.subset.end());
  if (std::adjacent_find(agg.subset.begin(), agg.subset.end()) != agg.subset.end()) {
    throw std::invalid_argument("aggregate_subset: duplicate expert index");
  }
  for (std::size_t k : agg.subset) {
    if (k >= state.experts()) throw std::out_of_range("aggregate_subset: expert index out of range");
    agg.pi_mass += state.prior[k];
  }
  if (!(agg.pi_mass > 0.0)) throw std::invalid_argument("aggregate_subset: subset has zero prior mass");
  for (std::size_t k : agg.subset) {
    const double w = state.prior[k] / agg.pi_mass;
    agg.R += w * state.R[k];
    agg.V += w * state.V[k];
  }
  agg.pi_mass = std::min(agg.pi_mass, 1.0);
  return agg;
}

double ln_plus(double x) { return std::log(std::max(x, 1.0)); }

double conjugate_normalizer(double a, double b) {
  if (a == 0.0 && b == 0.0) return 0.5;
  numerics::QuadratureSpec spec;
  spec.abs_tol = 1e-14;
  spec.rel_tol = 1e-13;
  return numerics::integrate_adaptive([=](double eta) { return std::exp(a * eta - b * eta * eta); }, spec)
      .value;
}

double bound_conjugate(double V, double pi_mass, double a, double b) {
  require_variance(V);
  require_pi_mass(pi_mass);
  const double vb = V + b;
  if (vb < 0.0) throw std::invalid_argument("bound_conjugate: V + b must be >= 0");
  const double Z = conjugate_normalizer(a, b);
  const double main = 2.0 * std::sqrt(vb * (0.5 + ln_plus(Z * std::sqrt(2.0 * vb) / pi_mass)));
  return main + 5.0 * ln_plus(2.0 * std::sqrt(5.0) * Z / pi_mass) - a;
}

double bound_cv(double V, double pi_mass) {
  require_variance(V);
  require_pi_mass(pi_mass);
  const double inner = ln_plus(2.0 * std::sqrt(V) / (2.0 - std::numbers::sqrt2));
  const double lead = std::sqrt(2.0 * V) *
                      (1.0 + std::sqrt(2.0 * ln_plus(inner * inner / (pi_mass * std::numbers::ln2))));
  return lead - 5.0 * std::log(pi_mass) + 4.0;
}

double bound_improper(double V, double pi_mass, std::uint64_t T) {
  require_variance(V);
  require_pi_mass(pi_mass);
  const double log_t = std::log1p(static_cast<double>(T));
  // The log below is negative only for T = 0, where V = 0 as well.
  const double inner = std::max(0.0, std::log((0.5 + log_t) / pi_mass));
  const double lead = V > 0.0 ? std::sqrt(2.0 * V) * (1.0 + std::sqrt(2.0 * inner)) : 0.0;
  return lead + 5.0 * std::log1p((1.0 + 2.0 * log_t) / pi_mass);
}

double bound_component_slice(double V, double entropy, std::size_t K, double alpha, double gamma_mass) {
  require_variance(V);
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("bound_component_slice: alpha must lie in (0, 2)");
  if (!(gamma_mass > 0.0 && gamma_mass <= 1.0)) {
    throw std::invalid_argument("bound_component_slice: gamma_mass must lie in (0, 1]");
  }
  const double coefficient = 2.0 / std::sqrt(alpha * (2.0 - alpha));
  return coefficient * std::sqrt(V * (entropy - static_cast<double>(K) * std::log(gamma_mass)));
}

std::size_t grid_size(std::uint64_t T) {
  if (T < 1) throw std::invalid_argument("grid_size: T must be >= 1");
  // ceil(log2 T) == bit_width(T - 1)
  return 1 + static_cast<std::size_t>(std::bit_width(T - 1));
}

double bound_component(double V, double entropy, std::size_t K, std::uint64_t T) {
  require_variance(V);
  if (T < 1) throw std::invalid_argument("bound_component: T must be >= 1");
  const double log_grid = std::log(static_cast<double>(grid_size(T)));
  const double k = static_cast<double>(K);
  return 4.0 / std::sqrt(3.0) * std::sqrt(V * (entropy + k * log_grid)) + 4.0 * entropy +
         k * std::max(4.0 * log_grid, 1.0);
}

double binary_relative_entropy(double v, double u) {
  if (!(v >= 0.0 && v <= 1.0) || !(u >= 0.0 && u <= 1.0)) {
    throw std::invalid_argument("binary_relative_entropy: arguments must lie in [0, 1]");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  double d = 0.0;
  if (v > 0.0) d += u > 0.0 ? v * std::log(v / u) : inf;
  if (v < 1.0) d += u < 1.0 ? (1.0 - v) * std::log((1.0 - v) / (1.0 - u)) : inf;
  return std::max(d, 0.0);
}

double binary_relative_entropy(std::span<const double> v, std::span<const double> u) {
  if (v.size() != u.size()) throw std::invalid_argument("binary_relative_entropy: dimension mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) d += binary_relative_entropy(v[k], u[k]);
  return d;
}

}  // namespace squint::bounds
