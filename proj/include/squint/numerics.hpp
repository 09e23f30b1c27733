#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace squint::numerics {

/// Gauss error function, erf(-x) == -erf(x) bit for bit.
double erf(double x);

/// Complementary error function.
double erfc(double x);

/// Scaled complementary error function exp(x^2) erfc(x), defined for all
/// finite x; overflows only for x below about -26.
double erfcx(double x);

/// Arguments of the learning-rate integral xi(R, V) = int_0^{1/2} e^{eta R - eta^2 V} d eta.
struct XiInput {
  double R;
  double V;
};

/// True when R lies in the closed window [-12 sqrt(V), V + 12 sqrt(V)] where the
/// erf closed form is evaluated directly. Outside it both erf arguments are
/// beyond 6 on the same side.
bool in_stability_window(double R, double V);

/// log xi(R, V) for V > 0. Finite for every finite (R, V) with V > 0, including
/// inputs where xi itself overflows a double.
double log_xi(XiInput input);

/// xi(R, V) = sqrt(pi) e^{R^2/4V} (erf(R/2sqrt(V)) - erf((R-V)/2sqrt(V))) / (2 sqrt(V)).
/// Inside the stability window the closed form is used; outside it the
/// large-argument expansion of both erfc terms. Strictly positive.
double xi_stable(XiInput input);

/// The truncated second-order expansion (e^{R/2 - V/4}(R + V) - R) / R^2 of xi
/// around R = +-inf. Only accurate far outside the stability window.
double xi_taylor_second_order(XiInput input);

/// log of xi_taylor_second_order, safe against overflow of e^{R/2 - V/4}.
double log_xi_taylor_second_order(XiInput input);

struct QuadratureSpec {
  double lower = 0.0;
  double upper = 0.5;
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_subdivisions = 200000;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
  std::size_t evaluations = 0;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, QuadratureResult partial)
      : std::runtime_error(what), partial_(partial) {}
  const QuadratureResult& partial() const noexcept { return partial_; }

 private:
  QuadratureResult partial_;
};

using ScalarFunction = std::function<double(double)>;

/// Globally adaptive Simpson quadrature. The interval with the largest local
/// error estimate is bisected until the summed estimate is below
/// max(abs_tol, rel_tol * |value|). Throws QuadratureError when
/// max_subdivisions is reached first.
QuadratureResult integrate_adaptive(const ScalarFunction& f, const QuadratureSpec& spec);

/// Fixed 30-point Gauss-Legendre rule on [lower, upper]; for smooth integrands.
double integrate_gauss_legendre(const ScalarFunction& f, double lower, double upper);

/// log sum_i exp(values[i]) with max shift. Returns -inf for an empty span or
/// when every entry is -inf.
double log_sum_exp(std::span<const double> values);

/// Normalizes log-domain weights onto the probability simplex.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

}  // namespace squint::numerics
