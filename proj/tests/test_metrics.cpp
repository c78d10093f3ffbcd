#include <gtest/gtest.h>

#include <cmath>

#include "holdpp/metrics.hpp"
#include "holdpp/sde.hpp"

using namespace holdpp;

namespace {
std::vector<std::vector<double>> gaussian_cloud(std::size_t count, double shift, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(count);
  for (auto& p : pts) p = {shift + standard_normal(rng), standard_normal(rng)};
  return pts;
}
}  // namespace

TEST(EnergyDistance, ZeroForIdenticalSamples) {
  const auto a = gaussian_cloud(200, 0.0, 1);
  EXPECT_NEAR(energy_distance(a, a), 0.0, 1e-12);
}

TEST(EnergyDistance, OnePointEach) {
  // 2|x-y| - 0 - 0
  EXPECT_DOUBLE_EQ(energy_distance({{0.0, 0.0}}, {{3.0, 4.0}}), 10.0);
}

TEST(EnergyDistance, SymmetricAndNonNegative) {
  const auto a = gaussian_cloud(300, 0.0, 2), b = gaussian_cloud(250, 0.3, 3);
  EXPECT_GE(energy_distance(a, b), 0.0);
  EXPECT_NEAR(energy_distance(a, b), energy_distance(b, a), 1e-12);
}

TEST(EnergyDistance, GrowsWithShift) {
  const auto a = gaussian_cloud(400, 0.0, 4);
  double prev = energy_distance(a, gaussian_cloud(400, 0.0, 5));
  for (double shift : {0.5, 1.0, 2.0}) {
    const double e = energy_distance(a, gaussian_cloud(400, shift, 5));
    EXPECT_GT(e, prev);
    prev = e;
  }
}

TEST(EnergyDistance, RejectsEmpty) {
  EXPECT_THROW(energy_distance({}, {{1.0}}), std::invalid_argument);
}

TEST(NearestCenterShares, CountsEachCenter) {
  const std::vector<std::vector<double>> centers{{0, 0}, {10, 0}};
  const auto s = nearest_center_shares({{1, 0}, {9, 1}, {11, 0}, {-3, 2}}, centers);
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_EQ(nearest_center_shares({}, centers), (std::vector<double>{0.0, 0.0}));
}
