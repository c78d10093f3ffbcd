#pragma once

// Minimal SVG output: scatter overlays and line plots on a fixed 800x800
// canvas, autoscaled to the data range plus a 5% margin.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace holdpp::svg {

inline constexpr double kCanvas = 800.0;
inline constexpr double kMargin = 0.05;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return lo > hi; }
  /// Pads by kMargin of the span on each side; a degenerate range gets unit span.
  Range padded() const {
    if (empty()) throw std::invalid_argument("cannot scale an empty range");
    double span = hi - lo;
    if (span <= 0.0) span = 1.0;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * span * (1.0 + 2.0 * kMargin);
    return {mid - half, mid + half};
  }
};

/// Maps data coordinates to pixels, y pointing up.
class Frame {
 public:
  Frame(Range x, Range y) : x_(x.padded()), y_(y.padded()) {}
  double px(double x) const { return (x - x_.lo) / (x_.hi - x_.lo) * kCanvas; }
  double py(double y) const { return kCanvas - (y - y_.lo) / (y_.hi - y_.lo) * kCanvas; }
  const Range& x_range() const { return x_; }
  const Range& y_range() const { return y_; }

 private:
  Range x_, y_;
};

namespace detail {
inline void open(std::ostringstream& os) {
  os << std::fixed << std::setprecision(2);
  os << R"(<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">)" << '\n';
  os << R"(<rect width="800" height="800" fill="white"/>)" << '\n';
}
inline void close(std::ostringstream& os) { os << "</svg>\n"; }

/// Points as (x, y); 1-D points are plotted against their index.
inline std::array<double, 2> xy(const std::vector<double>& p, std::size_t index) {
  if (p.empty()) throw std::invalid_argument("point with no coordinates");
  if (p.size() == 1) return {static_cast<double>(index), p[0]};
  return {p[0], p[1]};
}
}  // namespace detail

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return colors;
}

/// Reference points in gray under samples in color.
inline std::string scatter(const std::vector<std::vector<double>>& reference,
                           const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("no samples to plot");
  Range xr, yr;
  for (const auto* set : {&reference, &samples})
    for (std::size_t i = 0; i < set->size(); ++i) {
      const auto p = detail::xy((*set)[i], i);
      xr.add(p[0]);
      yr.add(p[1]);
    }
  const Frame frame(xr, yr);
  std::ostringstream os;
  detail::open(os);
  auto dots = [&](const std::vector<std::vector<double>>& pts, const std::string& fill, double opacity) {
    os << "<g fill=\"" << fill << "\" fill-opacity=\"" << opacity << "\">\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto p = detail::xy(pts[i], i);
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      os << "<circle cx=\"" << frame.px(p[0]) << "\" cy=\"" << frame.py(p[1]) << "\" r=\"2\"/>\n";
    }
    os << "</g>\n";
  };
  dots(reference, "#999999", 0.5);
  dots(samples, palette()[0], 0.7);
  detail::close(os);
  return os.str();
}

/// One polyline per path, each a list of (t, value) pairs.
inline std::string lines(const std::vector<std::vector<std::array<double, 2>>>& paths) {
  Range xr, yr;
  for (const auto& path : paths)
    for (const auto& p : path) {
      xr.add(p[0]);
      yr.add(p[1]);
    }
  if (xr.empty()) throw std::invalid_argument("no trajectory points to plot");
  const Frame frame(xr, yr);
  std::ostringstream os;
  detail::open(os);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    os << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << palette()[k % palette().size()]
       << "\" points=\"";
    for (const auto& p : paths[k])
      if (std::isfinite(p[1])) os << frame.px(p[0]) << ',' << frame.py(p[1]) << ' ';
    os << "\"/>\n";
  }
  detail::close(os);
  return os.str();
}

}  // namespace holdpp::svg
