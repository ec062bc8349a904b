#pragma once

#include "nnd/denoise.hpp"
#include "nnd/forward.hpp"

namespace nnd {

/// Prior score in latent space via the denoiser residual:
///   s(rho) = (D(rho, sigma) - rho) / sigma^2.
LatentField prior_score(const Denoiser& denoiser, const LatentField& rho_noisy, double sigma);

/// Same identity applied to an already-computed denoiser output.
LatentField prior_score_from(const LatentField& rho_hat, const LatentField& rho_noisy,
                             double sigma);

/// Gradient of the data log-likelihood with respect to the noisy latent,
/// evaluated at the denoised point:
///   residual (y - F(exp(rho_hat)))/y, pulled back through the forward
///   model, the exponent, and the denoiser.
/// The Gaussian normalizer is constant in rho and omitted.
LatentField likelihood_grad(const Denoiser& denoiser, const ForwardModel& fm,
                            const Measurement& y, const LatentField& rho_noisy, double sigma);

/// Variant reusing a denoiser evaluation (one forward pass per sampler
/// iteration shared between both gradient terms). `scale` converts the
/// normalized latent exp to physical units before the forward model runs
/// (inverse scaling), and back through the chain rule.
LatentField likelihood_grad_from(const Denoiser::Eval& eval, const ForwardModel& fm,
                                 const Measurement& y, double sigma,
                                 const ScaleSpec* scale = nullptr);

}  // namespace nnd
