#include <cmath>

#include "rtbyz/experiments.hpp"

namespace rtbyz {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParamError("p_crash must lie in [0, 1]");
}

}  // namespace

double sys_shutdown_basic(double p_crash, std::uint32_t f) {
  check_probability(p_crash);
  // -expm1(m * log1p(-p)) keeps precision for tiny p.
  if (p_crash == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(2 * f + 1) * std::log1p(-p_crash));
}

double sys_shutdown_overprovisioned(double p_crash, std::uint32_t n, std::uint32_t f) {
  check_probability(p_crash);
  if (n != 3 * f + 3) throw ParamError("overprovisioned shutdown needs n = 3f+3");
  const double m = static_cast<double>(n - f);
  if (p_crash == 1.0) return 1.0;
  const double q = 1.0 - p_crash;
  // P(at most one crash) = q^m + m p q^(m-1)
  const double keep = std::pow(q, m) + m * p_crash * std::pow(q, m - 1.0);
  return 1.0 - keep;
}

}  // namespace rtbyz
