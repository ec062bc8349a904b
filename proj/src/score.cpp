#include "nnd/score.hpp"

#include "nnd/latent.hpp"

namespace nnd {

LatentField prior_score_from(const LatentField& rho_hat, const LatentField& rho_noisy,
                             double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("prior_score: sigma must be positive");
  LatentField s = rho_noisy;
  s.values = (rho_hat.values - rho_noisy.values) / (sigma * sigma);
  return s;
}

LatentField prior_score(const Denoiser& denoiser, const LatentField& rho_noisy, double sigma) {
  return prior_score_from(denoiser.denoise(rho_noisy, sigma), rho_noisy, sigma);
}

LatentField likelihood_grad_from(const Denoiser::Eval& eval, const ForwardModel& fm,
                                 const Measurement& y, double sigma,
                                 const ScaleSpec* scale) {
  if (!(sigma > 0.0)) throw ValidationError("likelihood_grad: sigma must be positive");
  if ((y.values <= 0.0).any()) {
    throw ValidationError("likelihood_grad: measurement values must be strictly positive");
  }
  const LatentField& rho_hat = eval.output();

  // x_hat = exp(rho_hat), in physical units if a scale is given
  Field x_hat = from_latent(rho_hat);
  if (scale != nullptr) x_hat = apply_scale(x_hat, *scale, ScaleDirection::Inverse);

  const Eigen::ArrayXd f = fm.apply(x_hat);
  if (f.size() != y.values.size()) {
    throw ValidationError("likelihood_grad: measurement/model size mismatch");
  }
  if (!f.isFinite().all()) {
    throw DivergenceError("likelihood_grad: non-finite forward output");
  }
  const Eigen::ArrayXd residual = (y.values - f) / y.values;

  // pull back: data -> physical field -> scaled field -> latent -> noisy latent
  Field g_x = fm.vjp(x_hat, residual);
  if (scale != nullptr) {
    // d x_phys / d x_scaled = 1/factor, same factor pattern as inverse scaling
    g_x = apply_scale(g_x, *scale, ScaleDirection::Inverse);
  }
  LatentField g_rho_hat = g_x.retagged<tag::Latent>();
  g_rho_hat.values *= rho_hat.values.exp();  // d exp(rho)/d rho
  return eval.pullback(g_rho_hat);
}

LatentField likelihood_grad(const Denoiser& denoiser, const ForwardModel& fm,
                            const Measurement& y, const LatentField& rho_noisy, double sigma) {
  const auto eval = denoiser.evaluate(rho_noisy, sigma);
  return likelihood_grad_from(*eval, fm, y, sigma);
}

}  // namespace nnd
