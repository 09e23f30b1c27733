#include "squint/component_iprod.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "squint/bounds.hpp"
#include "squint/numerics.hpp"

namespace squint::combinatorial {

namespace {

std::vector<double> checked_prior(std::span<const double> prior_vec, std::size_t K) {
  if (prior_vec.size() != K) throw std::invalid_argument("prior vector: dimension mismatch");
  return polytopes::clamp_interior(prior_vec);
}

}  // namespace

double mix_loss(std::span<const double> u, std::span<const double> x1, std::span<const double> x0) {
  if (u.size() != x1.size() || u.size() != x0.size()) throw std::invalid_argument("mix_loss: dimension mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] > 0.0 && u[k] < 1.0)) throw std::invalid_argument("mix_loss: u must lie in (0, 1)");
    if (!std::isfinite(x1[k]) || !std::isfinite(x0[k])) throw std::invalid_argument("mix_loss: x must be finite");
    const double d = x0[k] - x1[k];
    if (d < 700.0) {
      total += x0[k] - std::log1p(u[k] * std::expm1(d));
    } else {
      const double a = std::log(u[k]) - x1[k];
      const double b = std::log1p(-u[k]) - x0[k];
      const double m = std::max(a, b);
      total -= m + std::log(std::exp(a - m) + std::exp(b - m));
    }
  }
  return total;
}

ComponentBayes::ComponentBayes(ConceptClass cls, std::span<const double> prior_vec,
                               polytopes::ProjectionOptions options)
    : cls_(std::move(cls)), options_(options) {
  u_ = polytopes::project(cls_, checked_prior(prior_vec, cls_.dimension()), options_);
}

double ComponentBayes::observe(std::span<const double> x1, std::span<const double> x0) {
  const auto interior = polytopes::clamp_interior(u_);
  const double loss = mix_loss(interior, x1, x0);
  u_ = polytopes::project(cls_, polytopes::unconstrained_update(interior, x1, x0), options_);
  return loss;
}

ComponentIProd ComponentIProd::make_game(ConceptClass cls, std::span<const double> prior_vec, std::uint64_t T_max,
                                         polytopes::ProjectionOptions options) {
  const std::size_t n = bounds::grid_size(T_max);
  std::vector<double> etas(n), masses(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) etas[i] = std::ldexp(1.0, -static_cast<int>(i + 1));
  return ComponentIProd(std::move(cls), prior_vec, std::move(etas), std::move(masses), options);
}

ComponentIProd::ComponentIProd(ConceptClass cls, std::span<const double> prior_vec, std::vector<double> etas,
                               std::vector<double> masses, polytopes::ProjectionOptions options)
    : cls_(std::move(cls)), options_(options), K_(cls_.dimension()) {
  prior_ = checked_prior(prior_vec, K_);
  if (etas.empty() || etas.size() != masses.size()) throw std::invalid_argument("grid: etas and masses differ");
  double total = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0 && etas[i] <= 0.5)) throw std::invalid_argument("grid: eta must lie in (0, 1/2]");
    if (!(masses[i] > 0.0)) throw std::invalid_argument("grid: masses must be positive");
    total += masses[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("grid: masses must sum to one");
  gamma_ = std::move(masses);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    EtaSlice s;
    s.eta = etas[i];
    s.u_tilde = prior_;
    s.L_init = -std::log(gamma_[i] * etas[i]);
    s.L = s.L_init;
    slices_.push_back(std::move(s));
  }
  sum_r1_.assign(K_, 0.0);
  sum_r0_.assign(K_, 0.0);
  sum_r1_sq_.assign(K_, 0.0);
  sum_r0_sq_.assign(K_, 0.0);
  last_r1_.assign(K_, 0.0);
  last_r0_.assign(K_, 0.0);
}

const std::vector<double>& ComponentIProd::play() {
  if (played_) return u_;
  std::vector<double> logw(slices_.size());
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    auto& s = slices_[i];
    if (!s.projected) {
      s.u_proj = polytopes::project(cls_, s.u_tilde, options_);
      s.projected = true;
    }
    logw[i] = -s.L;
  }
  const auto w = numerics::normalize_log_weights(logw);
  u_.assign(K_, 0.0);
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    for (std::size_t k = 0; k < K_; ++k) u_[k] += w[i] * slices_[i].u_proj[k];
  }
  for (double& x : u_) x = std::clamp(x, 0.0, 1.0);
  played_ = true;
  return u_;
}

void ComponentIProd::observe(std::span<const double> losses) {
  if (losses.size() != K_) throw std::invalid_argument("observe: dimension mismatch");
  for (double l : losses) {
    if (!(l >= -1.0 && l <= 1.0)) throw std::invalid_argument("observe: losses must lie in [-1, 1]");
  }
  play();
  const double invK = 1.0 / static_cast<double>(K_);
  for (auto& s : slices_) {
    double gain = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
      const double l = losses[k];
      if (l == 0.0) continue;
      const double ue = s.u_proj[k];
      const double den = 1.0 + s.eta * (u_[k] - ue) * l;
      const double num = ue * (1.0 + s.eta * (u_[k] - 1.0) * l);
      if (!(den > 0.0) || !(num >= 0.0)) throw std::domain_error("observe: nonpositive update factor");
      s.u_tilde[k] = std::clamp(num / den, polytopes::kInteriorClamp, 1.0 - polytopes::kInteriorClamp);
      gain += std::log(den);
    }
    s.log_gain += invK * gain;
    s.L = s.L_init - s.log_gain;
    s.projected = false;
  }
  for (std::size_t k = 0; k < K_; ++k) {
    last_r1_[k] = u_[k] * losses[k] - losses[k];
    last_r0_[k] = u_[k] * losses[k];
    sum_r1_[k] += last_r1_[k];
    sum_r0_[k] += last_r0_[k];
    sum_r1_sq_[k] += last_r1_[k] * last_r1_[k];
    sum_r0_sq_[k] += last_r0_[k] * last_r0_[k];
  }
  for (auto& c : comparators_) {
    double r = 0.0, v = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
      r += c.v[k] * last_r1_[k] + (1.0 - c.v[k]) * last_r0_[k];
      v += c.v[k] * last_r1_[k] * last_r1_[k] + (1.0 - c.v[k]) * last_r0_[k] * last_r0_[k];
    }
    c.R += r;
    c.V += v;
  }
  played_ = false;
  ++t_;
}

double ComponentIProd::potential() const {
  double phi = 0.0;
  for (std::size_t i = 0; i < slices_.size(); ++i) phi += gamma_[i] * std::expm1(slices_[i].log_gain);
  return phi;
}

std::size_t ComponentIProd::register_comparator(std::span<const double> v) {
  if (v.size() != K_) throw std::invalid_argument("register_comparator: dimension mismatch");
  if (cls_.hull_residual(v) > 1e-8) throw std::invalid_argument("register_comparator: v is not in the hull");
  comparators_.push_back(ComparatorStats{std::vector<double>(v.begin(), v.end()), 0.0, 0.0});
  return comparators_.size() - 1;
}

std::size_t ComponentIProd::register_vertices(std::size_t cap) {
  const auto vertices = polytopes::enumerate_vertices(cls_, cap);
  for (const auto& c : vertices) comparators_.push_back(ComparatorStats{polytopes::to_vector(c), 0.0, 0.0});
  return vertices.size();
}

std::pair<double, double> ComponentIProd::regret_variance(std::span<const double> v) const {
  if (v.size() != K_) throw std::invalid_argument("regret_variance: dimension mismatch");
  double R = 0.0, V = 0.0;
  for (std::size_t k = 0; k < K_; ++k) {
    R += v[k] * sum_r1_[k] + (1.0 - v[k]) * sum_r0_[k];
    V += v[k] * sum_r1_sq_[k] + (1.0 - v[k]) * sum_r0_sq_[k];
  }
  return {R, V};
}

ComparatorAggregate ComponentIProd::aggregate(std::span<const double> v) const {
  const auto [R, V] = regret_variance(v);
  return ComparatorAggregate{std::vector<double>(v.begin(), v.end()), R, V,
                             bounds::binary_relative_entropy(v, prior_)};
}

std::pair<double, double> ComponentIProd::slice_inequality(double eta, std::span<const double> v) const {
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    if (slices_[i].eta != eta) continue;
    const auto agg = aggregate(v);
    return {eta * agg.R - eta * eta * agg.V,
            agg.entropy - static_cast<double>(K_) * std::log(gamma_[i])};
  }
  throw std::invalid_argument("slice_inequality: eta is not a grid point");
}

}  // namespace squint::combinatorial
