#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "comets/error.hpp"

namespace comets {

namespace detail {

// Regularised upper incomplete gamma Q(a, x) for a > 0, x >= 0.
// Series for P when x < a + 1, Lentz continued fraction for Q otherwise.
inline double regularized_gamma_q(double a, double x) {
  constexpr double eps = 1e-16;
  constexpr double tiny = 1e-300;
  constexpr int max_iter = 10000;
  if (x <= 0.0) return 1.0;
  const double log_prefactor = a * std::log(x) - x - std::lgamma(a);

  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < max_iter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * eps) break;
    }
    return 1.0 - sum * std::exp(log_prefactor);
  }

  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return std::exp(log_prefactor) * h;
}

}  // namespace detail

// Upper tail 1 - F(x) of the chi-squared distribution with `df` degrees of freedom.
inline double chi2_sf(double x, std::size_t df) {
  if (df == 0) throw DomainError("chi2_sf: df must be at least 1");
  if (!(x >= 0.0)) throw DomainError("chi2_sf: x must be nonnegative, got " + std::to_string(x));
  if (std::isinf(x)) return 0.0;
  const double q = detail::regularized_gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
  return q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
}

inline double chi2_cdf(double x, std::size_t df) { return 1.0 - chi2_sf(x, df); }

// Upper tail 1 - Phi(x) of the standard normal.
inline double normal_sf(double x) {
  if (!std::isfinite(x)) throw DomainError("normal_sf: non-finite argument");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double normal_cdf(double x) { return normal_sf(-x); }

}  // namespace comets
