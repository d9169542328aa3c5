#pragma once

// Goodness of fit of observed GE burst lengths against the geometric pmf.

#include <boost/math/distributions/chi_squared.hpp>
#include <cstdint>
#include <map>

namespace rtbyz::testing {

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
};

/// Bins L = 1, 2, ... while the expected count stays at least 5; everything
/// longer goes into one tail bin.
inline ChiSquare burst_chi_square(const std::map<int, std::uint64_t>& bursts, double alpha) {
  std::uint64_t total = 0;
  for (const auto& [len, c] : bursts) total += c;
  const double n = static_cast<double>(total);
  ChiSquare out;
  double tail_p = 1.0;
  std::uint64_t seen = 0;
  int bins = 0;
  for (int L = 1;; ++L) {
    const double p = alpha;
    double pl = p;
    for (int i = 1; i < L; ++i) pl *= 1.0 - p;
    const double next_tail = tail_p - pl;
    // Stop once this bin or the remaining tail would fall under 5 expected.
    if (n * pl < 5.0 || n * next_tail < 5.0) break;
    const auto it = bursts.find(L);
    const double obs = it == bursts.end() ? 0.0 : static_cast<double>(it->second);
    out.statistic += (obs - n * pl) * (obs - n * pl) / (n * pl);
    seen += static_cast<std::uint64_t>(obs);
    tail_p = next_tail;
    ++bins;
  }
  const double obs_tail = static_cast<double>(total - seen);
  out.statistic += (obs_tail - n * tail_p) * (obs_tail - n * tail_p) / (n * tail_p);
  ++bins;
  out.dof = bins - 1;
  boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

}  // namespace rtbyz::testing
