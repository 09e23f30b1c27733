#pragma once
// Reference computations used only by the tests. They are deliberately slow and
// simple, and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// erf by its Maclaurin series, summed in long double.
inline long double erf_series(long double x, int terms = 50) {
  long double sum = 0.0L;
  long double power = x;  // x^{2n+1}
  long double factorial = 1.0L;
  for (int n = 0; n < terms; ++n) {
    const long double term = power / (factorial * (2 * n + 1));
    sum += n % 2 == 0 ? term : -term;
    power *= x * x;
    factorial *= n + 1;
  }
  return 2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum;
}

/// Composite Simpson rule with `panels` panels (rounded up to even), long double sums.
inline long double simpson(const std::function<long double(long double)>& f, long double a, long double b,
                           std::size_t panels = 1000000) {
  if (panels % 2) ++panels;
  const long double h = (b - a) / panels;
  long double odd = 0.0L, even = 0.0L;
  for (std::size_t i = 1; i < panels; ++i) {
    const long double v = f(a + h * i);
    (i % 2 ? odd : even) += v;
  }
  return h / 3.0L * (f(a) + f(b) + 4.0L * odd + 2.0L * even);
}

/// log of int_a^b e^{g(eta)} d eta by Simpson on e^{g - max g}; safe when the
/// integral itself overflows.
inline long double log_simpson(const std::function<long double(long double)>& g, long double a, long double b,
                               std::size_t panels = 1000000) {
  if (panels % 2) ++panels;
  const long double h = (b - a) / panels;
  long double peak = -INFINITY;
  for (std::size_t i = 0; i <= panels; ++i) peak = std::max(peak, g(a + h * i));
  const long double shifted =
      simpson([&](long double x) { return std::exp(g(x) - peak); }, a, b, panels);
  return peak + std::log(shifted);
}

/// int_0^{1/2} eta^power e^{eta R - eta^2 V} d eta.
inline long double squint_integral(double R, double V, int power, std::size_t panels = 1000000) {
  return simpson(
      [=](long double eta) {
        return std::pow(eta, static_cast<long double>(power)) * std::exp(eta * R - eta * eta * V);
      },
      0.0L, 0.5L, panels);
}

inline long double binary_kl(long double v, long double u) {
  long double d = 0.0L;
  if (v > 0.0L) d += v * std::log(v / u);
  if (v < 1.0L) d += (1.0L - v) * std::log((1.0L - v) / (1.0L - u));
  return d;
}

/// Uniform draws in [lo, hi) from a fixed engine, independent of the library RNG.
struct Draws {
  std::mt19937 engine;
  explicit Draws(unsigned seed) : engine(seed) {}
  double operator()(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
};

}  // namespace oracle
