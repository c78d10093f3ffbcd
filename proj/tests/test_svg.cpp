#include <gtest/gtest.h>

#include <regex>

#include "holdpp/svg.hpp"

using namespace holdpp::svg;

namespace {
std::size_t count(const std::string& s, const std::string& what) {
  std::size_t c = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++c;
  return c;
}
}  // namespace

TEST(Range, PadsByMargin) {
  Range r;
  r.add(0.0);
  r.add(10.0);
  const auto p = r.padded();
  EXPECT_DOUBLE_EQ(p.lo, -0.5);
  EXPECT_DOUBLE_EQ(p.hi, 10.5);
}

TEST(Range, DegenerateGetsUnitSpan) {
  Range r;
  r.add(3.0);
  const auto p = r.padded();
  EXPECT_LT(p.lo, 3.0);
  EXPECT_GT(p.hi, 3.0);
  EXPECT_THROW(Range{}.padded(), std::invalid_argument);
}

TEST(Frame, CornersMapInsideCanvas) {
  Range x, y;
  x.add(-1.0);
  x.add(1.0);
  y.add(0.0);
  y.add(2.0);
  const Frame f(x, y);
  EXPECT_NEAR(f.px(-1.0), 800.0 * 0.05 / 1.1, 1e-9);
  EXPECT_NEAR(f.px(1.0), 800.0 * 1.05 / 1.1, 1e-9);
  EXPECT_GT(f.py(0.0), f.py(2.0));  // y points up
}

TEST(Scatter, FixedViewportAndPointCounts) {
  const auto svg = scatter({{0, 0}, {1, 1}, {2, 0}}, {{0.5, 0.5}, {1.5, 0.2}});
  EXPECT_NE(svg.find(R"(width="800" height="800")"), std::string::npos);
  EXPECT_EQ(count(svg, "<circle"), 5u);
  EXPECT_NE(svg.find("#999999"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(Scatter, AllCoordinatesInsideCanvas) {
  const auto svg = scatter({{-100, 3}, {50, -7}}, {{0, 0}});
  const std::regex num(R"re(c[xy]="([-0-9.]+)")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), num); it != std::sregex_iterator(); ++it) {
    const double v = std::stod((*it)[1]);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 800.0);
  }
}

TEST(Scatter, OneDimensionalPointsUseIndex) {
  EXPECT_EQ(count(scatter({}, {{1.0}, {2.0}, {0.5}}), "<circle"), 3u);
}

TEST(Scatter, EmptySamplesRejected) { EXPECT_THROW(scatter({{0, 0}}, {}), std::invalid_argument); }

TEST(Lines, OnePolylinePerPath) {
  const auto svg = lines({{{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}, {{0, 2}, {1, 2}}});
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_THROW(lines({}), std::invalid_argument);
}
