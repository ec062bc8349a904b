#include "nnd/sampler.hpp"

#include <cmath>
#include <fstream>

#include "nnd/rng.hpp"
#include "nnd/score.hpp"

namespace nnd {

InitMode init_mode_from_name(const std::string& name) {
  if (name == "latent-eps-centered") return InitMode::LatentEpsCentered;
  if (name == "latent-zero-centered") return InitMode::LatentZeroCentered;
  if (name == "direct") return InitMode::Direct;
  throw ValidationError("unknown init mode: '" + name + "'");
}

const char* init_mode_name(InitMode mode) {
  switch (mode) {
    case InitMode::LatentEpsCentered: return "latent-eps-centered";
    case InitMode::LatentZeroCentered: return "latent-zero-centered";
    default: return "direct";
  }
}

double RunConfig::resolved_eps() const { return eps > 0.0 ? eps : default_eps(); }

ScaleSpec RunConfig::resolved_scale() const {
  return scale.factors.empty() ? ScaleSpec::ones(channels) : scale;
}

void Trace::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "t,sigma,alpha,rho_min,rho_max,rho_mean,prior_score_norm,lik_grad_norm,"
        "negative_fraction,residual_norm\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.t << ',' << r.sigma << ',' << r.alpha << ',' << r.rho_min << ',' << r.rho_max << ','
       << r.rho_mean << ',' << r.prior_score_norm << ',' << r.lik_grad_norm << ','
       << r.negative_fraction << ',' << r.residual_norm << '\n';
  }
}

double injected_noise_std(const AnnealSchedule& schedule, int t) {
  return std::sqrt(2.0 * schedule.alpha(t));
}

namespace {

void validate_config(const RunConfig& config, const Denoiser& /*denoiser*/) {
  if (config.schedule.T <= 0) throw ValidationError("run config: schedule is empty");
  if (config.dims.nz <= 0 || config.dims.ny <= 0 || config.dims.nx <= 0) {
    throw ValidationError("run config: dims must be positive");
  }
  if (config.channels.empty()) throw ValidationError("run config: no channels");
  if (!(config.divergence_bound > 0.0)) {
    throw ValidationError("run config: divergence bound must be positive");
  }
  if (config.likelihood_weight < 0.0) {
    throw ValidationError("run config: likelihood weight must be nonnegative");
  }
  if (!config.resolved_scale().covers(config.channels)) {
    throw ValidationError("run config: scale does not cover all channels");
  }
}

Eigen::ArrayXd gaussian_array(rng::Stream& stream, std::int64_t n, double mean, double stddev) {
  Eigen::ArrayXd a(n);
  for (std::int64_t i = 0; i < n; ++i) a[i] = mean + stddev * stream.normal();
  return a;
}

TraceRow state_row(const Eigen::ArrayXd& rho, int t, const AnnealSchedule& sched) {
  TraceRow row;
  row.t = t;
  row.sigma = sched.sigma(t);
  row.alpha = sched.alpha(t);
  row.rho_min = rho.minCoeff();
  row.rho_max = rho.maxCoeff();
  row.rho_mean = rho.mean();
  row.negative_fraction =
      static_cast<double>((rho < 0.0).count()) / static_cast<double>(rho.size());
  return row;
}

/// Shared latent ALD loop. `fm`/`y` null for pure generation.
SampleResult run_latent(const RunConfig& config, const Denoiser& denoiser,
                        const ForwardModel* fm, const Measurement* y) {
  validate_config(config, denoiser);
  if (config.init == InitMode::Direct) {
    throw ValidationError("init mode 'direct' is only valid for the baseline sampler");
  }
  const double eps = config.resolved_eps();
  const ScaleSpec scale = config.resolved_scale();
  const auto& sched = config.schedule;
  const std::int64_t n =
      config.dims.voxels() * static_cast<std::int64_t>(config.channels.size());

  const double init_mean = config.init == InitMode::LatentEpsCentered ? std::log(eps) : 0.0;
  rng::Stream init_stream(config.seed, rng::StreamKind::SamplerInit, 0);

  LatentField rho(config.dims, config.channels);
  rho.values = gaussian_array(init_stream, n, init_mean, sched.sigma_T);

  SampleResult result;
  result.trace.rng_algorithm = rng::algorithm_id();
  result.trace.rows.reserve(static_cast<std::size_t>(sched.T));

  const bool use_data = fm != nullptr && config.likelihood_weight > 0.0;
  double prev_residual = std::numeric_limits<double>::infinity();
  bool residual_monotone_up = use_data;
  bool first_residual = true;

  for (int t = sched.T; t >= 1; --t) {
    TraceRow row = state_row(rho.values, t, sched);

    const double sigma = sched.sigma(t);
    const double alpha = sched.alpha(t);

    const auto eval = denoiser.evaluate(rho, sigma);
    const LatentField score = prior_score_from(eval->output(), rho, sigma);
    row.prior_score_norm = std::sqrt(score.values.square().sum());

    Eigen::ArrayXd drift = alpha * score.values;
    if (use_data) {
      const LatentField g = likelihood_grad_from(*eval, *fm, *y, sigma, &scale);
      row.lik_grad_norm = std::sqrt(g.values.square().sum());
      drift += (alpha * config.likelihood_weight) * g.values;

      Field x_hat = from_latent(eval->output());
      x_hat = apply_scale(x_hat, scale, ScaleDirection::Inverse);
      const double res = std::sqrt((y->values - fm->apply(x_hat)).square().sum());
      row.residual_norm = res;
      if (!first_residual && res <= prev_residual) residual_monotone_up = false;
      first_residual = false;
      prev_residual = res;
    }

    rng::Stream iter_stream(config.seed, rng::StreamKind::SamplerIter,
                            static_cast<std::uint64_t>(t));
    const double noise_std = std::sqrt(2.0 * alpha);
    for (std::int64_t i = 0; i < n; ++i) {
      rho.values[i] += drift[i] + noise_std * iter_stream.normal();
    }

    result.trace.rows.push_back(row);
    if (config.snapshot_every > 0 && (sched.T - t) % config.snapshot_every == 0) {
      result.trace.snapshots.push_back(rho);
    }

    if (rho.values.abs().maxCoeff() > config.divergence_bound ||
        !rho.values.isFinite().all()) {
      throw DivergenceError("sampler diverged at t=" + std::to_string(t) + " (|rho| > " +
                            std::to_string(config.divergence_bound) + ")");
    }
  }

  result.residual_grew_monotonically = use_data && residual_monotone_up;
  result.field = apply_scale(from_latent(rho), scale, ScaleDirection::Inverse);
  return result;
}

}  // namespace

SampleResult generate(const RunConfig& config, const Denoiser& denoiser) {
  return run_latent(config, denoiser, nullptr, nullptr);
}

SampleResult invert(const RunConfig& config, const Denoiser& denoiser, const ForwardModel& fm,
                    const Measurement& y) {
  if ((y.values <= 0.0).any()) {
    throw ValidationError("invert: measurement values must be strictly positive");
  }
  return run_latent(config, denoiser, &fm, &y);
}

BaselineResult generate_direct_baseline(const RunConfig& config, const Denoiser& denoiser_on_x) {
  validate_config(config, denoiser_on_x);
  if (config.init != InitMode::Direct) {
    throw ValidationError("baseline sampler requires init mode 'direct'");
  }
  const auto& sched = config.schedule;
  const std::int64_t n =
      config.dims.voxels() * static_cast<std::int64_t>(config.channels.size());

  rng::Stream init_stream(config.seed, rng::StreamKind::SamplerInit, 0);

  // object-space state; LatentField is reused as the "real-valued grid"
  // carrier so the object-space denoiser can run on it
  LatentField x(config.dims, config.channels);
  x.values = gaussian_array(init_stream, n, 0.0, sched.sigma_T);

  BaselineResult result;
  result.dims = config.dims;
  result.trace.rng_algorithm = rng::algorithm_id();
  result.trace.rows.reserve(static_cast<std::size_t>(sched.T));

  for (int t = sched.T; t >= 1; --t) {
    TraceRow row = state_row(x.values, t, sched);

    const double sigma = sched.sigma(t);
    const double alpha = sched.alpha(t);
    const LatentField denoised = denoiser_on_x.denoise(x, sigma);
    const Eigen::ArrayXd score = (denoised.values - x.values) / (sigma * sigma);
    row.prior_score_norm = std::sqrt(score.square().sum());

    rng::Stream iter_stream(config.seed, rng::StreamKind::SamplerIter,
                            static_cast<std::uint64_t>(t));
    const double noise_std = std::sqrt(2.0 * alpha);
    for (std::int64_t i = 0; i < n; ++i) {
      x.values[i] += alpha * score[i] + noise_std * iter_stream.normal();
    }

    result.trace.rows.push_back(row);
    if (x.values.abs().maxCoeff() > config.divergence_bound || !x.values.isFinite().all()) {
      throw DivergenceError("baseline sampler diverged at t=" + std::to_string(t));
    }
  }
  result.values = x.values;
  return result;
}

}  // namespace nnd
