#include <gtest/gtest.h>

#include "holdpp/verify.hpp"

using namespace holdpp;

namespace {
bool all_pass(const std::vector<CheckResult>& rs) {
  for (const auto& r : rs)
    if (!r.passed) return false;
  return true;
}

VerifyOptions quick(std::size_t n_max, Mutation m = Mutation::none) {
  VerifyOptions opt;
  opt.n_max = n_max;
  opt.mutation = m;
  opt.optimality_trials = 100;
  opt.random_specs = 4;
  return opt;
}
}  // namespace

TEST(Verify, CorrectBuildPasses) {
  const auto opt = quick(6);
  EXPECT_TRUE(all_pass(verify_dynamics(opt)));
  EXPECT_TRUE(all_pass(verify_optimality(opt)));
  EXPECT_TRUE(all_pass(verify_spectral(opt)));
}

TEST(Verify, ResultsCarryResidualsAndNames) {
  for (const auto& r : verify_dynamics(quick(4))) {
    EXPECT_FALSE(r.name.empty());
    EXPECT_LE(r.residual, r.tolerance);
    EXPECT_FALSE(r.detail.empty());
  }
}

TEST(Verify, SpectralSuiteToTwelve) { EXPECT_TRUE(all_pass(verify_spectral(quick(12)))); }

TEST(Verify, PerturbedGammaIsCaught) {
  const auto opt = quick(5, Mutation::perturb_gamma2);
  EXPECT_FALSE(check_critical_spectrum(opt).passed);
  EXPECT_FALSE(check_nilpotency(opt).passed);
  EXPECT_FALSE(check_critical_coefficients(opt).passed);
}

TEST(Verify, FlippedGammaIsCaught) {
  const auto opt = quick(5, Mutation::flip_gamma2);
  EXPECT_FALSE(check_critical_spectrum(opt).passed);
  EXPECT_FALSE(check_optimality(opt).passed);
  EXPECT_NE(check_critical_spectrum(opt).detail.find("gamma_2"), std::string::npos);
}

TEST(Verify, MutationLeavesOrderTwoAlone) {
  // there is no gamma_2 at n = 2
  const auto spec = mutate(critical_params(2), Mutation::flip_gamma2);
  EXPECT_TRUE(spec.critical());
}
