// Sample a 1-D Gaussian with the exact score of the third-order diffusion,
// then compare the generated moments with the data.

#include <cmath>
#include <cstdio>

#include "holdpp/holdpp.hpp"
#include "holdpp/oracles.hpp"

int main() {
  using namespace holdpp;
  const auto spec = critical_params(3);
  std::printf("n=3  lambda*=%.6f  xi=%.6f  gamma=(%.6f, %.6f)\n", *spec.lambda_star, spec.xi, spec.gammas[0],
              spec.gammas[1]);

  const double mean = 1.5, var = 0.49;
  const oracle::GaussianMarginal marginal(spec, mean, var, 0.08);
  Rng rng(1);
  const auto out = em_reverse_batch(spec, 1, 4000, marginal.batch_score(), ReverseConfig{}, rng);

  double m = 0, v = 0;
  for (const auto& x : out) m += x.at(0, 0);
  m /= static_cast<double>(out.size());
  for (const auto& x : out) v += (x.at(0, 0) - m) * (x.at(0, 0) - m);
  v /= static_cast<double>(out.size() - 1);
  std::printf("data      mean %.4f  var %.4f\n", mean, var);
  std::printf("generated mean %.4f  var %.4f\n", m, v);
}
