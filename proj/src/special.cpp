#include "cpt/special.hpp"
#include "cpt/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpt {

namespace {

constexpr int kMaxTerms = 10'000;
constexpr double kEps = 1e-15;

// Lower series P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x)
{
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < kMaxTerms; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps)
      break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x)
{
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny)
      d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny)
      c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps)
      break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x)
{
  if (!(a > 0.0) || x < 0.0 || std::isnan(x))
    throw InvalidArgument("gamma_q: need a > 0 and x >= 0");
  if (x == 0.0)
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  if (x < a + 1.0)
    return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double df)
{
  if (x <= 0.0)
    return 1.0;
  return std::clamp(gamma_q(0.5 * df, 0.5 * x), 0.0, 1.0);
}

double ks_uniform_distance(std::vector<double> values)
{
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n)
{
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k)
    sum += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * t * t);
  return std::clamp(sum, 0.0, 1.0);
}

} // namespace cpt
