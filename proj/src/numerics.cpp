#include "squint/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

namespace squint::numerics {

namespace {

constexpr double kWindowHalfWidth = 12.0;
// Below this variance the erf difference loses more than ~2 digits to
// cancellation while the integrand is still a gentle exponential.
constexpr double kSmallVariance = 1e-2;
constexpr double kContinuedFractionStart = 5.0;

double erfcx_continued_fraction(double x) {
  // erfc(x) e^{x^2} sqrt(pi) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), evaluated bottom up.
  double t = x;
  for (int n = 120; n >= 1; --n) t = x + 0.5 * n / t;
  return 1.0 / (std::sqrt(std::numbers::pi) * t);
}

// Large-argument expansion 1/(x sqrt(pi)) sum_n (-1)^n (2n-1)!! / (2x^2)^n,
// truncated at the smallest term. Used for x >= 6 only.
double erfcx_asymptotic(double x) {
  const double inv = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 80; ++n) {
    const double next = -term * (2.0 * n - 1.0) * inv;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum / (x * std::sqrt(std::numbers::pi));
}

// e^{c} a - b for positive a, b, returned as log; falls back to -inf when the
// difference is not positive.
double log_scaled_difference(double log_scale, double a, double b) {
  const double d = a - std::exp(-log_scale) * b;
  if (!(d > 0.0)) return -std::numeric_limits<double>::infinity();
  return log_scale + std::log(d);
}

double log_xi_gauss_legendre(double R, double V) {
  const double peak = std::clamp(R / (2.0 * V), 0.0, 0.5);
  const double shift = peak * R - peak * peak * V;
  const double integral = integrate_gauss_legendre(
      [&](double eta) { return std::exp(eta * R - eta * eta * V - shift); }, 0.0, 0.5);
  return shift + std::log(integral);
}

void require_xi_domain(const XiInput& in) {
  if (!std::isfinite(in.R) || !std::isfinite(in.V)) {
    throw std::invalid_argument("xi: non-finite input");
  }
  if (!(in.V > 0.0)) throw std::invalid_argument("xi: V must be positive");
}

}  // namespace

double erf(double x) { return std::erf(x); }

double erfc(double x) { return std::erfc(x); }

double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x < kContinuedFractionStart) return std::exp(x * x) * std::erfc(x);
  return erfcx_continued_fraction(x);
}

bool in_stability_window(double R, double V) {
  const double s = std::sqrt(V);
  return R >= -kWindowHalfWidth * s && R <= V + kWindowHalfWidth * s;
}

double log_xi(XiInput input) {
  require_xi_domain(input);
  const double R = input.R;
  const double V = input.V;
  const double sv = std::sqrt(V);
  const double A = R / (2.0 * sv);
  const double B = (R - V) / (2.0 * sv);
  // A^2 - B^2 = R/2 - V/4
  const double c = 0.5 * R - 0.25 * V;
  const double log_prefactor = 0.5 * std::log(std::numbers::pi) - std::log(2.0 * sv);

  if (in_stability_window(R, V)) {
    if (V < kSmallVariance) return log_xi_gauss_legendre(R, V);
    if (B >= 0.0) {
      // e^{A^2}(erfc(B) - erfc(A)) = e^{c} erfcx(B) - erfcx(A)
      const double l = log_scaled_difference(c, erfcx(B), erfcx(A));
      if (std::isfinite(l)) return log_prefactor + l;
      return log_xi_gauss_legendre(R, V);
    }
    if (A <= 0.0) {
      // e^{A^2}(erfc(-A) - erfc(-B)) = erfcx(-A) - e^{c} erfcx(-B)
      const double d = erfcx(-A) - std::exp(c) * erfcx(-B);
      if (d > 0.0) return log_prefactor + std::log(d);
      return log_xi_gauss_legendre(R, V);
    }
    return log_prefactor + A * A + std::log(erf(A) - erf(B));
  }

  // Outside the window: both arguments beyond 6 on the same side.
  if (B > 0.0) {
    return log_prefactor + log_scaled_difference(c, erfcx_asymptotic(B), erfcx_asymptotic(A));
  }
  return log_prefactor + std::log(erfcx_asymptotic(-A) - std::exp(c) * erfcx_asymptotic(-B));
}

double xi_stable(XiInput input) { return std::exp(log_xi(input)); }

double log_xi_taylor_second_order(XiInput input) {
  require_xi_domain(input);
  const double R = input.R;
  const double V = input.V;
  if (R == 0.0) throw std::invalid_argument("xi_taylor_second_order: R must be nonzero");
  const double c = 0.5 * R - 0.25 * V;
  const double log_r2 = 2.0 * std::log(std::abs(R));
  if (c > 0.0) {
    return c + std::log((R + V) - R * std::exp(-c)) - log_r2;
  }
  return std::log(std::exp(c) * (R + V) - R) - log_r2;
}

double xi_taylor_second_order(XiInput input) {
  return std::exp(log_xi_taylor_second_order(input));
}

void QuadratureSpec::validate() const {
  if (!(lower < upper)) throw std::invalid_argument("quadrature: lower must be below upper");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
    throw std::invalid_argument("quadrature: tolerances must be positive");
  }
  if (max_subdivisions == 0) throw std::invalid_argument("quadrature: max_subdivisions must be positive");
}

namespace {

struct Panel {
  double a, b;
  double fa, fm, fb;
  double simpson;  // coarse estimate on [a, b]
  double refined;  // two-panel estimate with Richardson correction
  double error;
  // quarter-point values, reused when the panel is split
  double fl, fr;
};

struct ByError {
  bool operator()(const Panel& x, const Panel& y) const {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;  // deterministic tie break
  }
};

}  // namespace

QuadratureResult integrate_adaptive(const ScalarFunction& f, const QuadratureSpec& spec) {
  spec.validate();
  QuadratureResult result;

  auto eval = [&](double x) {
    ++result.evaluations;
    return f(x);
  };
  auto make_panel = [&](double a, double b, double fa, double fm, double fb) {
    Panel p{a, b, fa, fm, fb, 0, 0, 0, 0, 0};
    const double h = b - a;
    const double m = 0.5 * (a + b);
    p.fl = eval(0.5 * (a + m));
    p.fr = eval(0.5 * (m + b));
    p.simpson = h / 6.0 * (fa + 4.0 * fm + fb);
    const double two = h / 12.0 * (fa + 4.0 * p.fl + 2.0 * fm + 4.0 * p.fr + fb);
    p.refined = two + (two - p.simpson) / 15.0;
    p.error = std::abs(two - p.simpson) / 15.0;
    if (!std::isfinite(p.refined)) {
      throw QuadratureError("quadrature: integrand not finite on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "]",
                            result);
    }
    return p;
  };

  // Max-heap on the local error estimate.
  std::vector<Panel> heap;
  constexpr int kInitialPanels = 8;
  const double width = (spec.upper - spec.lower) / kInitialPanels;
  std::vector<double> nodes(2 * kInitialPanels + 1);
  for (int i = 0; i <= 2 * kInitialPanels; ++i) {
    const double x = i == 2 * kInitialPanels ? spec.upper : spec.lower + 0.5 * width * i;
    nodes[i] = eval(x);
  }
  for (int i = 0; i < kInitialPanels; ++i) {
    const double a = spec.lower + width * i;
    const double b = i + 1 == kInitialPanels ? spec.upper : a + width;
    heap.push_back(make_panel(a, b, nodes[2 * i], nodes[2 * i + 1], nodes[2 * i + 2]));
  }
  std::make_heap(heap.begin(), heap.end(), ByError{});

  auto totals = [&]() {
    double value = 0.0;
    double error = 0.0;
    for (const Panel& p : heap) {
      value += p.refined;
      error += p.error;
    }
    return std::pair{value, error};
  };

  double value = 0.0;
  double error = 0.0;
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  while (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(value))) {
    if (result.subdivisions >= spec.max_subdivisions) {
      result.value = value;
      result.error = error;
      throw QuadratureError("quadrature: subdivision limit reached", result);
    }
    std::pop_heap(heap.begin(), heap.end(), ByError{});
    const Panel p = heap.back();
    heap.pop_back();
    const double m = 0.5 * (p.a + p.b);
    Panel left = make_panel(p.a, m, p.fa, p.fl, p.fm);
    Panel right = make_panel(m, p.b, p.fm, p.fr, p.fb);
    value += left.refined + right.refined - p.refined;
    error += left.error + right.error - p.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), ByError{});
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), ByError{});
    ++result.subdivisions;
    // Resynchronize running sums now and then to keep drift below tolerance.
    if (result.subdivisions % 1024 == 0) {
      auto [v, e] = totals();
      value = v;
      error = e;
    }
  }
  auto [v, e] = totals();
  result.value = v;
  result.error = e;
  return result;
}

double integrate_gauss_legendre(const ScalarFunction& f, double lower, double upper) {
  return boost::math::quadrature::gauss<double, 30>::integrate(f, lower, upper);
}

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) throw std::domain_error("normalize_log_weights: no finite weight");
  std::vector<double> w(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - total);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace squint::numerics
