#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace holdpp {

namespace detail {
inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

inline double mean_pair_distance(const std::vector<std::vector<double>>& a,
                                 const std::vector<std::vector<double>>& b) {
  double s = 0.0;
  for (const auto& x : a)
    for (const auto& y : b) s += euclidean(x, y);
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}
}  // namespace detail

/// Energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| (V-statistic, so it is
/// non-negative and equals zero only for identical samples).
inline double energy_distance(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("energy distance needs nonempty samples");
  return 2.0 * detail::mean_pair_distance(a, b) - detail::mean_pair_distance(a, a) -
         detail::mean_pair_distance(b, b);
}

/// Fraction of points whose nearest center is each center.
inline std::vector<double> nearest_center_shares(const std::vector<std::vector<double>>& pts,
                                                 const std::vector<std::vector<double>>& centers) {
  std::vector<double> shares(centers.size(), 0.0);
  if (pts.empty()) return shares;
  for (const auto& p : pts) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = detail::euclidean(p, centers[c]);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    shares[best] += 1.0;
  }
  for (auto& s : shares) s /= static_cast<double>(pts.size());
  return shares;
}

}  // namespace holdpp
