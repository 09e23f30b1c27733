#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "squint/polytopes.hpp"

namespace squint::combinatorial {

using polytopes::ConceptClass;

/// Sum over coordinates of -ln(u^k e^{-x1^k} + (1 - u^k) e^{-x0^k}).
double mix_loss(std::span<const double> u, std::span<const double> x1, std::span<const double> x0);

/// Projected componentwise Bayes on conv(C) for mix loss.
class ComponentBayes {
 public:
  ComponentBayes(ConceptClass cls, std::span<const double> prior_vec,
                 polytopes::ProjectionOptions options = {});

  const std::vector<double>& usage() const noexcept { return u_; }
  /// Suffers the mix loss of the current usage, then updates. Returns that loss.
  double observe(std::span<const double> x1, std::span<const double> x0);

 private:
  ConceptClass cls_;
  polytopes::ProjectionOptions options_;
  std::vector<double> u_;
};

struct EtaSlice {
  double eta = 0.0;
  std::vector<double> u_tilde;
  std::vector<double> u_proj;
  double L = 0.0;
  double L_init = 0.0;
  // (1/K) sum of ln(1 + eta (u - u^eta) l), i.e. L_init - L kept without the offset.
  double log_gain = 0.0;
  bool projected = false;
};

/// Running v-weighted regret and variance for one registered comparator.
struct ComparatorStats {
  std::vector<double> v;
  double R = 0.0;
  double V = 0.0;
};

struct ComparatorAggregate {
  std::vector<double> v;
  double R = 0.0;
  double V = 0.0;
  double entropy = 0.0;  // binary relative entropy of v from the prior vector
};

class ComponentIProd {
 public:
  /// Grid 2^{-i}, i = 1..grid_size(T_max), uniform masses.
  static ComponentIProd make_game(ConceptClass cls, std::span<const double> prior_vec, std::uint64_t T_max,
                                  polytopes::ProjectionOptions options = {});

  /// Arbitrary grid with masses summing to one, etas in (0, 1/2].
  ComponentIProd(ConceptClass cls, std::span<const double> prior_vec, std::vector<double> etas,
                 std::vector<double> masses, polytopes::ProjectionOptions options = {});

  /// Usage u_t for the current round. Projects stale slices first.
  const std::vector<double>& play();
  /// Losses in [-1, 1]^K. Calls play() if the round has not been played yet.
  void observe(std::span<const double> losses);

  /// sum_eta gamma(eta) (e^{(L_init - L)} - 1)
  double potential() const;

  /// Adds a comparator v in conv(C); its statistics start at the current round.
  std::size_t register_comparator(std::span<const double> v);
  /// Registers every vertex of the class; returns their count.
  std::size_t register_vertices(std::size_t cap = 100000);
  const std::vector<ComparatorStats>& comparators() const noexcept { return comparators_; }

  /// R_T^v and V_T^v for any v, from per-coordinate totals since round 1.
  std::pair<double, double> regret_variance(std::span<const double> v) const;
  ComparatorAggregate aggregate(std::span<const double> v) const;

  /// (eta R^v - eta^2 V^v, entropy(v) - K ln gamma(eta)); eta must be a grid point.
  std::pair<double, double> slice_inequality(double eta, std::span<const double> v) const;

  const ConceptClass& concept_class() const noexcept { return cls_; }
  const std::vector<EtaSlice>& slices() const noexcept { return slices_; }
  const std::vector<double>& gamma() const noexcept { return gamma_; }
  const std::vector<double>& prior() const noexcept { return prior_; }
  std::size_t dimension() const noexcept { return K_; }
  std::uint64_t rounds() const noexcept { return t_; }
  /// Regret vectors of the last observed round.
  const std::vector<double>& last_r1() const noexcept { return last_r1_; }
  const std::vector<double>& last_r0() const noexcept { return last_r0_; }

 private:
  ConceptClass cls_;
  polytopes::ProjectionOptions options_;
  std::size_t K_;
  std::vector<double> prior_;
  std::vector<double> gamma_;
  std::vector<EtaSlice> slices_;
  std::vector<double> u_;
  bool played_ = false;
  std::uint64_t t_ = 0;
  std::vector<double> sum_r1_, sum_r0_, sum_r1_sq_, sum_r0_sq_;
  std::vector<double> last_r1_, last_r0_;
  std::vector<ComparatorStats> comparators_;
};

}  // namespace squint::combinatorial
