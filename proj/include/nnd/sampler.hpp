#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nnd/denoise.hpp"
#include "nnd/forward.hpp"
#include "nnd/latent.hpp"
#include "nnd/schedule.hpp"

namespace nnd {

enum class InitMode {
  LatentEpsCentered,   // rho_T ~ N(log eps, sigma_T^2)
  LatentZeroCentered,  // rho_T ~ N(0, sigma_T^2)
  Direct,              // object space x_T ~ N(0, sigma_T^2); baseline only
};

InitMode init_mode_from_name(const std::string& name);
const char* init_mode_name(InitMode mode);

struct RunConfig {
  AnnealSchedule schedule;
  double eps = 0.0;  // 0 -> default_eps()
  InitMode init = InitMode::LatentEpsCentered;
  std::uint64_t seed = 0;
  GridDims dims{16, 16, 16};
  std::vector<std::string> channels{"c0"};
  ScaleSpec scale;  // empty -> all ones
  double likelihood_weight = 1.0;
  double divergence_bound = 1e3;
  int snapshot_every = 0;  // latent snapshots every m iterations; 0 = off

  double resolved_eps() const;
  ScaleSpec resolved_scale() const;
};

/// One record per iteration; row 0 describes the state entering t = T
/// (i.e. the initialization), so the trace always has length T.
struct TraceRow {
  int t = 0;
  double sigma = 0.0;
  double alpha = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double rho_mean = 0.0;
  double prior_score_norm = 0.0;
  double lik_grad_norm = 0.0;
  double negative_fraction = 0.0;  // direct baseline only
  double residual_norm = 0.0;      // inversion only
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<LatentField> snapshots;
  std::string rng_algorithm;

  void write_csv(const std::filesystem::path& path) const;
};

struct SampleResult {
  Field field;
  Trace trace;
  /// Set by invert() when the data residual grew monotonically over the
  /// run -- a diagnostic, not an error.
  bool residual_grew_monotonically = false;
};

/// Latent-space annealed Langevin generation:
///   rho_{t-1} = rho_t + alpha_t (D(rho_t, sigma_t) - rho_t)/sigma_t^2
///               + sqrt(2 alpha_t) eta_t,
/// initialized per config, returning exp(rho_0) rescaled to physical units.
/// Output is strictly positive by construction.
SampleResult generate(const RunConfig& config, const Denoiser& denoiser);

/// Same loop with the data term alpha_t * w * d log p(y | rho)/d rho added.
/// With likelihood_weight == 0 this reproduces generate() bit-exactly under
/// the same seed.
SampleResult invert(const RunConfig& config, const Denoiser& denoiser, const ForwardModel& fm,
                    const Measurement& y);

struct BaselineResult {
  /// Raw object-space output; NOT guaranteed nonnegative (that failure is
  /// what this baseline demonstrates).
  Eigen::ArrayXd values;
  GridDims dims;
  Trace trace;
};

/// Object-space ALD with direct init x_T ~ N(0, sigma_T^2). Records the
/// fraction of negative elements per iteration.
BaselineResult generate_direct_baseline(const RunConfig& config, const Denoiser& denoiser_on_x);

/// Standard deviation of the injected perturbation at iteration t
/// (sqrt(2 alpha_t)); exposed so tests can check the noise law.
double injected_noise_std(const AnnealSchedule& schedule, int t);

}  // namespace nnd
