#include "nnd/schedule.hpp"

#include <cmath>

namespace nnd {

TrainSigmas train_sigmas(int L, double sigma_1, double sigma_L) {
  if (L < 2) throw ValidationError("train_sigmas: L must be at least 2");
  if (!(sigma_1 > 0.0) || !(sigma_L > 0.0)) {
    throw ValidationError("train_sigmas: endpoints must be positive");
  }
  if (sigma_1 == sigma_L) {
    throw ValidationError("train_sigmas: endpoints must differ (sequence is strictly monotone)");
  }
  TrainSigmas out;
  out.L = L;
  out.sigma_1 = sigma_1;
  out.sigma_L = sigma_L;
  out.values.resize(L);
  const double ratio = sigma_1 / sigma_L;
  for (int i = 1; i <= L; ++i) {
    out.values[i - 1] = sigma_L * std::pow(ratio, static_cast<double>(L - i) / (L - 1));
  }
  // pin the endpoints exactly; pow(r, 1) and pow(r, 0) already give them,
  // but make the contract explicit
  out.values[0] = sigma_1;
  out.values[L - 1] = sigma_L;
  return out;
}

AnnealSchedule anneal_schedule(int T, int K, double sigma_1, double sigma_T, double zeta) {
  if (!(sigma_1 > 0.0) || !(sigma_T > 0.0)) {
    throw ValidationError("anneal_schedule: sigma endpoints must be positive");
  }
  if (!(zeta > 0.0)) throw ValidationError("anneal_schedule: zeta must be positive");
  if (K < 1) throw ValidationError("anneal_schedule: K must be at least 1");
  const int full_blocks = T / K;
  if (T <= K || full_blocks < 2) {
    throw ValidationError("anneal_schedule: T must exceed K by at least one full block");
  }
  const int t_full = full_blocks * K;  // largest multiple of K <= T

  AnnealSchedule out;
  out.T = T;
  out.K = K;
  out.sigma_1 = sigma_1;
  out.sigma_T = sigma_T;
  out.zeta = zeta;
  out.sigmas.resize(T);
  out.alphas.resize(T);

  // one pow per block keeps each staircase step exactly constant
  Eigen::ArrayXd block_sigma(full_blocks);
  const double ratio = sigma_T / sigma_1;
  for (int b = 0; b < full_blocks; ++b) {
    block_sigma[b] =
        sigma_1 * std::pow(ratio, static_cast<double>(K) * b / (t_full - K));
  }
  block_sigma[0] = sigma_1;
  block_sigma[full_blocks - 1] = sigma_T;

  for (int t = 1; t <= T; ++t) {
    int b = (t - 1) / K;
    if (b >= full_blocks) b = full_blocks - 1;  // trailing partial block
    const double s = block_sigma[b];
    out.sigmas[t - 1] = s;
    const double r = s / sigma_1;
    out.alphas[t - 1] = zeta * r * r;
  }
  return out;
}

AnnealSchedule default_anneal_schedule() {
  return anneal_schedule(600, 5, 1e-2, 1e2, 2e-6);
}

TrainSigmas default_train_sigmas() {
  return train_sigmas(150, 1e-2, 1e2);
}

}  // namespace nnd
