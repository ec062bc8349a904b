#pragma once

#include <Eigen/Core>

#include "nnd/common.hpp"

namespace nnd {

/// Noise levels used when training a denoiser: a geometric sequence
///   sigma(i) = sigma_L * (sigma_1 / sigma_L)^((L - i)/(L - 1)),  i = 1..L.
struct TrainSigmas {
  int L = 0;
  double sigma_1 = 0.0;
  double sigma_L = 0.0;
  Eigen::ArrayXd values;  // values[i-1] = sigma(i)

  double at(int i) const { return values[i - 1]; }
};

TrainSigmas train_sigmas(int L, double sigma_1, double sigma_L);

/// Annealing schedule for the sampler. t is a countdown index (T..1);
/// arrays are stored so that sigma(t) = sigmas[t-1]. sigma follows a
/// staircase that is constant over blocks of K iterations:
///   sigma(t) = sigma_1 * (sigma_T/sigma_1)^([K/(T'-K)] * floor((t-1)/K)),
/// with T' = K*floor(T/K), and alpha(t) = zeta * (sigma(t)/sigma_1)^2.
/// When T is not a multiple of K the trailing partial block keeps the last
/// full block's sigma, so the endpoints stay pinned at sigma_1 and sigma_T.
struct AnnealSchedule {
  int T = 0;
  int K = 0;
  double sigma_1 = 0.0;
  double sigma_T = 0.0;
  double zeta = 0.0;
  Eigen::ArrayXd sigmas;  // sigmas[t-1]
  Eigen::ArrayXd alphas;  // alphas[t-1]

  double sigma(int t) const { return sigmas[t - 1]; }
  double alpha(int t) const { return alphas[t - 1]; }
};

AnnealSchedule anneal_schedule(int T, int K, double sigma_1, double sigma_T, double zeta);

/// Defaults used by the shipped configs: T=600, K=5,
/// sigma in [1e-2, 1e2], zeta = 2e-6.
AnnealSchedule default_anneal_schedule();

/// Training defaults: L=150 levels spanning [1e-2, 1e2].
TrainSigmas default_train_sigmas();

}  // namespace nnd
