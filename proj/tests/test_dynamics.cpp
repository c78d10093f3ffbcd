#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "holdpp/dynamics.hpp"
#include "holdpp/oracles.hpp"

using namespace holdpp;

TEST(CriticalParams, SecondOrder) {
  const auto spec = critical_params(2);
  EXPECT_EQ(*spec.lambda_star, -1.0);
  EXPECT_EQ(spec.xi, 2.0);
  ASSERT_EQ(spec.gammas.size(), 1u);
  EXPECT_EQ(spec.gammas[0], 1.0);
  EXPECT_EQ(drift_matrix(spec), (Matrix{{0, 1}, {-1, -2}}));
}

TEST(CriticalParams, ThirdOrder) {
  const auto spec = critical_params(3);
  EXPECT_NEAR(*spec.lambda_star, -std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(spec.xi, 3.0 * std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(spec.xi, 5.19615, 1e-5);
  EXPECT_EQ(spec.gammas[0], 1.0);
  EXPECT_NEAR(spec.gammas[1], 2.0 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(spec.gammas[1], 2.82843, 1e-5);
  for (const auto& e : eigenvalues(drift_matrix(spec))) EXPECT_LE(std::hypot(e.re + std::sqrt(3.0), e.im), 1e-4);
}

TEST(CriticalParams, GammaOneIsExactlyOne) {
  for (std::size_t n = 2; n <= 16; ++n) EXPECT_EQ(critical_params(n).gammas[0], 1.0) << "n=" << n;
}

TEST(CriticalParams, RejectsOrderOne) { EXPECT_THROW(critical_params(1), std::invalid_argument); }

TEST(CriticalParams, SatisfiesOwnValidation) {
  for (std::size_t n = 2; n <= 16; ++n) EXPECT_NO_THROW(critical_params(n).validate());
}

TEST(DriftSpec, ValidationCatchesBadCoefficients) {
  auto spec = critical_params(4);
  spec.gammas[2] *= 1.001;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = critical_params(4);
  spec.xi *= 1.001;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = critical_params(3);
  spec.gammas[1] = -spec.gammas[1];
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  EXPECT_THROW(general_params({1.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(general_params({1.0}, -1.0), std::invalid_argument);
  EXPECT_THROW(general_params({1.0}, 1.0, 0.0), std::invalid_argument);
  DriftSpec bad;
  bad.n = 3;
  bad.gammas = {1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(BuildDrift, OrderOne) {
  const auto dm = build_drift(ou_spec(1.5, 0.5));
  EXPECT_EQ(dm.f, (Matrix{{-1.5}}));
  EXPECT_EQ(dm.ggt, (Matrix{{1.5}}));
}

TEST(BuildDrift, ThirdOrderLayout) {
  const auto spec = general_params({0.7, 1.3}, 2.1, 0.5);
  const auto dm = build_drift(spec);
  EXPECT_EQ(dm.f, (Matrix{{0, 0.7, 0}, {-0.7, 0, 1.3}, {0, -1.3, -2.1}}));
  EXPECT_EQ(dm.ggt, (Matrix{{0, 0, 0}, {0, 0, 0}, {0, 0, 2.1}}));
}

TEST(BuildDrift, DiffusionIdentityIsExact) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> g(1 + trial % 6);
    for (auto& v : g) v = u(rng);
    const auto spec = general_params(g, u(rng), u(rng));
    const auto dm = build_drift(spec);
    EXPECT_EQ(max_abs(dm.ggt + (dm.f + dm.f.transpose()) * spec.l_inv), 0.0);
  }
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto spec = n == 1 ? ou_spec() : critical_params(n);
    const auto dm = build_drift(spec);
    EXPECT_EQ(max_abs(dm.ggt + (dm.f + dm.f.transpose()) * spec.l_inv), 0.0);
  }
}

TEST(DriftMatrix, TraceIsMinusXi) {
  for (std::size_t n = 2; n <= 10; ++n) {
    const auto spec = critical_params(n);
    EXPECT_EQ(trace(drift_matrix(spec)), -spec.xi);
  }
}

TEST(DriftMatrix, CriticalSpecIsHurwitz) {
  for (std::size_t n = 2; n <= 8; ++n)
    for (const auto& e : eigenvalues(drift_matrix(critical_params(n)))) EXPECT_LT(e.re, 0.0);
}

TEST(ExpmCritical, TimeZeroIsIdentity) {
  for (std::size_t n = 2; n <= 6; ++n) EXPECT_EQ(expm_critical(critical_params(n), 0.0), Matrix::identity(n));
}

TEST(ExpmCritical, SecondOrderByHand) {
  const Matrix expected = Matrix{{2, 1}, {-1, 0}} * std::exp(-1.0);
  EXPECT_LE(max_abs(expm_critical(critical_params(2), 1.0) - expected), 1e-15);
}

TEST(ExpmCritical, FourthOrderMatchesOracle) {
  const auto spec = critical_params(4);
  EXPECT_LE(max_abs(expm_critical(spec, 0.7) - expm_oracle(drift_matrix(spec), 0.7)), 1e-10);
}

TEST(ExpmCritical, MatchesOracleOnHorizon) {
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto spec = critical_params(n);
    const auto f = drift_matrix(spec);
    for (double t = 0.0; t <= 10.0; t += 0.25) EXPECT_LE(max_abs(expm_critical(spec, t) - expm_oracle(f, t)), 1e-10);
  }
}

TEST(ExpmCritical, RejectsNonCritical) {
  EXPECT_THROW(expm_critical(general_params({1.0}, 1.0), 1.0), std::invalid_argument);
  EXPECT_THROW(expm_critical(critical_params(2), -1.0), std::invalid_argument);
}

TEST(ExpmCritical, NilpotentShift) {
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto spec = critical_params(n);
    auto nil = drift_matrix(spec);
    for (std::size_t i = 0; i < n; ++i) nil(i, i) -= *spec.lambda_star;
    EXPECT_LE(max_abs(matrix_power(nil, static_cast<unsigned>(n))), 1e-8) << "n=" << n;
  }
}

TEST(ForwardStats, TimeZero) {
  const auto spec = critical_params(3);
  const auto s0 = initial_cov_factor(spec, 0.08);
  const auto st = forward_stats(spec, 0.0, s0);
  EXPECT_EQ(st.propagator, Matrix::identity(3));
  EXPECT_LE(max_abs(st.cov_factor - s0), 1e-16);
  EXPECT_EQ(st.chol_factor(0, 0), 0.0);
}

TEST(ForwardStats, InitialCovarianceConvention) {
  const auto spec = critical_params(4);
  EXPECT_EQ(initial_cov_factor(spec, 0.08), Matrix::diagonal({0.0, 0.04, 0.04, 0.04}));
}

TEST(ForwardStats, LongTimeLimit) {
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto spec = critical_params(n);
    const auto st = forward_stats(spec, 50.0, initial_cov_factor(spec, 0.08));
    EXPECT_LE(max_abs(st.cov_factor - Matrix::identity(n) * 0.5), 1e-6);
    EXPECT_LE(max_abs(st.propagator), 1e-6);
  }
}

TEST(ForwardStats, CholeskyReproducesCovariance) {
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto spec = n == 1 ? ou_spec() : critical_params(n);
    const auto s0 = initial_cov_factor(spec, 0.08);
    for (double t : {5e-3, 0.1, 1.0, 5.0}) {
      const auto st = forward_stats(spec, t, s0);
      EXPECT_LE(frobenius_norm(st.chol_factor * st.chol_factor.transpose() - st.cov_factor),
                1e-10 * std::max(1.0, frobenius_norm(st.cov_factor)));
    }
  }
}

TEST(ForwardStats, NearlySingularSmallTimes) {
  // n=4 at this t made cholesky of the assembled S_t hit a negative pivot
  const auto spec4 = critical_params(4);
  const auto st = forward_stats(spec4, 0.0051598287294691994, initial_cov_factor(spec4, 0.08));
  EXPECT_GT(st.chol_factor(3, 3), 0.07);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto spec = n == 1 ? ou_spec() : critical_params(n);
    const auto s0 = initial_cov_factor(spec, 0.08);
    double worst = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
      const double t = trial < 1000 ? 1e-5 + 0.02 * u(rng) / 5.0 : u(rng);
      const auto f = forward_stats(spec, t, s0);
      const auto ll = f.chol_factor * f.chol_factor.transpose();
      for (std::size_t i = 0; i < n; ++i) {
        ASSERT_GT(f.chol_factor(n - 1, n - 1), 0.0);
        for (std::size_t j = 0; j < n; ++j)
          worst = std::max(worst, std::abs(ll(i, j) - f.cov_factor(i, j)) /
                                      std::sqrt(f.cov_factor(i, i) * f.cov_factor(j, j)));
      }
    }
    EXPECT_LE(worst, 1e-12) << "n=" << n;
  }
}

TEST(NoiseFactor, MatchesMomentGramian) {
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto spec = n == 1 ? ou_spec() : critical_params(n);
    for (double t : {1e-4, 5e-3, 0.1, 0.5}) {
      const auto f = critical_noise_factor(spec, t);
      const auto q = f * f.transpose();
      const auto ref = oracle::noise_gramian_moments(spec, t);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          EXPECT_LE(std::abs(q(i, j) - ref(i, j)), 1e-12 * std::abs(ref(i, j)) + 1e-300)
              << "n=" << n << " t=" << t << " (" << i << "," << j << ")";
    }
  }
}

TEST(NoiseFactor, AgreesWithClosedFormAtLongerTimes) {
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto spec = critical_params(n);
    for (double t : {1.0, 5.0, 20.0}) {
      const auto f = critical_noise_factor(spec, t);
      const auto closed = covariance_closed_form(spec, propagator(spec, t), Matrix(n, n));
      EXPECT_LE(max_abs(f * f.transpose() - closed), 1e-12) << "n=" << n << " t=" << t;
    }
  }
  EXPECT_THROW(critical_noise_factor(general_params({1.0}, 2.0), 1.0), std::invalid_argument);
}

TEST(ForwardStats, MatchesRk4ForCriticalAndGeneralSpecs) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<DriftSpec> specs{ou_spec(), critical_params(2), critical_params(4), critical_params(6)};
  for (int i = 0; i < 5; ++i) specs.push_back(general_params({u(rng), u(rng), u(rng)}, u(rng), 0.5));
  for (const auto& spec : specs) {
    Matrix a(spec.n, spec.n);
    for (std::size_t r = 0; r < spec.n; ++r)
      for (std::size_t c = 0; c < spec.n; ++c) a(r, c) = g(rng);
    const auto s0 = a * a.transpose();
    const auto dm = build_drift(spec);
    for (double t : {0.1, 0.5, 1.0, 5.0})
      EXPECT_LE(frobenius_norm(forward_stats(spec, t, s0).cov_factor - oracle::covariance_rk4(dm.f, dm.ggt, s0, t)),
                1e-6);
  }
}

TEST(ForwardStats, RejectsBadInputs) {
  const auto spec = critical_params(3);
  EXPECT_THROW(forward_stats(spec, 1.0, Matrix::identity(2)), DimensionError);
  EXPECT_THROW(forward_stats(spec, -0.5, Matrix::identity(3)), std::invalid_argument);
}

TEST(OuStats, TimeZero) {
  const auto s = ou_stats(1.0, 0.5, 0.3, 0.0);
  EXPECT_EQ(s.mean_coeff, 1.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(0.3));
}

TEST(OuStats, LongTimeLimit) {
  const auto s = ou_stats(1.0, 0.5, 0.0, 100.0);
  EXPECT_NEAR(s.mean_coeff, 0.0, 1e-40);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(0.5));
}

TEST(OuStats, UnitTimeAgreesWithForwardStats) {
  const auto s = ou_stats(1.0, 0.5, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_coeff, std::exp(-1.0));
  EXPECT_NEAR(s.std, std::sqrt(0.5 * (1.0 - std::exp(-2.0))), 1e-15);
  const auto st = forward_stats(ou_spec(1.0, 0.5), 1.0, Matrix{{0.0}});
  EXPECT_NEAR(st.propagator(0, 0), s.mean_coeff, 1e-12);
  EXPECT_NEAR(st.chol_factor(0, 0), s.std, 1e-12);
}

TEST(OuStats, RejectsInvalidArguments) {
  EXPECT_THROW(ou_stats(1.0, 0.5, -0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(ou_stats(1.0, 0.5, 0.1, -1.0), std::invalid_argument);
  EXPECT_THROW(ou_stats(0.0, 0.5, 0.1, 1.0), std::invalid_argument);
}

TEST(Optimality, PerturbationsNeverBeatCriticalRate) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> factor(0.5, 2.0);
  for (std::size_t n = 2; n <= 5; ++n) {
    const auto base = critical_params(n);
    const double lam = *base.lambda_star;
    for (int trial = 0; trial < 200; ++trial) {
      auto g = base.gammas;
      for (auto& v : g) v *= factor(rng);
      double worst = -1e300;
      for (const auto& e : eigenvalues(drift_matrix(general_params(g, base.xi)))) worst = std::max(worst, e.re);
      EXPECT_GE(worst, lam - 1e-6);
    }
  }
}

TEST(Optimality, StrictAwayFromCriticalForThirdOrderAndUp) {
  // a 10% change in one coefficient moves the slowest mode visibly
  for (std::size_t n = 3; n <= 6; ++n) {
    const auto base = critical_params(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (double f : {0.9, 1.1}) {
        auto g = base.gammas;
        g[i] *= f;
        double worst = -1e300;
        for (const auto& e : eigenvalues(drift_matrix(general_params(g, base.xi)))) worst = std::max(worst, e.re);
        EXPECT_GT(worst, *base.lambda_star + 1e-4) << "n=" << n << " i=" << i << " f=" << f;
      }
  }
}

TEST(Optimality, SecondOrderUnderdampedKeepsTheSameRate) {
  // with xi fixed at 2, any gamma_1 > 1 gives eigenvalues -1 +- i sqrt(gamma^2 - 1)
  const auto ev = eigenvalues(drift_matrix(general_params({1.5}, 2.0)));
  for (const auto& e : ev) EXPECT_NEAR(e.re, -1.0, 1e-12);
  for (const auto& e : eigenvalues(drift_matrix(general_params({0.8}, 2.0)))) EXPECT_GE(e.re, -2.0);
  double slow = -1e300;
  for (const auto& e : eigenvalues(drift_matrix(general_params({0.8}, 2.0)))) slow = std::max(slow, e.re);
  EXPECT_GT(slow, -1.0 + 1e-4);
}
