#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

#include "nnd/field.hpp"

namespace nnd {

/// Anything that maps (noisy latent, sigma) to an estimate of the clean
/// latent's posterior mean, and can pull a cotangent back through itself
/// (v^T dD/drho).
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual LatentField denoise(const LatentField& rho_noisy, double sigma) const = 0;
  virtual LatentField vjp(const LatentField& rho_noisy, double sigma,
                          const LatentField& cotangent) const = 0;

  /// A single evaluation whose backward state can be reused. The sampler
  /// runs one evaluation per iteration and feeds both the prior score and
  /// the data term from it.
  class Eval {
   public:
    virtual ~Eval() = default;
    virtual const LatentField& output() const = 0;
    virtual LatentField pullback(const LatentField& cotangent) const = 0;
  };
  virtual std::unique_ptr<Eval> evaluate(const LatentField& rho_noisy, double sigma) const;

  virtual std::string describe() const = 0;
};

// ---------------------------------------------------------------------------
// Element-wise analytic priors. These give the exact posterior mean, so the
// denoising path can be verified against quadrature without any training.
// ---------------------------------------------------------------------------

struct GaussianPrior {
  double mean = 0.0;
  double stddev = 1.0;
};

struct MixtureComponent {
  double weight = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct MixturePrior {
  std::vector<MixtureComponent> components;
};

/// Validates invariants (positive stddevs, weights positive and summing to 1
/// within 1e-12). Throws ValidationError.
void validate(const GaussianPrior& p);
void validate(const MixturePrior& p);

/// Exact posterior mean E[rho | rho_noisy] with rho ~ prior and
/// rho_noisy = rho + N(0, sigma^2), element-wise.
Eigen::ArrayXd analytic_denoise(const GaussianPrior& p, const Eigen::ArrayXd& rho_noisy,
                                double sigma);
Eigen::ArrayXd analytic_denoise(const MixturePrior& p, const Eigen::ArrayXd& rho_noisy,
                                double sigma);

/// Element-wise derivative d(posterior mean)/d(rho_noisy); the Jacobian is
/// diagonal, so a vjp is cotangent * derivative.
Eigen::ArrayXd analytic_denoise_deriv(const GaussianPrior& p, const Eigen::ArrayXd& rho_noisy,
                                      double sigma);
Eigen::ArrayXd analytic_denoise_deriv(const MixturePrior& p, const Eigen::ArrayXd& rho_noisy,
                                      double sigma);

/// Marginal density of rho_noisy under the prior (prior convolved with
/// N(0, sigma^2)); closed form, used by score identities and sampling tests.
double marginal_pdf(const GaussianPrior& p, double rho_noisy, double sigma);
double marginal_cdf(const MixturePrior& p, double rho_noisy, double sigma);

/// Denoiser adapters over the analytic priors.
template <typename Prior>
class AnalyticDenoiser final : public Denoiser {
 public:
  explicit AnalyticDenoiser(Prior prior);

  LatentField denoise(const LatentField& rho_noisy, double sigma) const override;
  LatentField vjp(const LatentField& rho_noisy, double sigma,
                  const LatentField& cotangent) const override;
  std::unique_ptr<Eval> evaluate(const LatentField& rho_noisy, double sigma) const override;
  std::string describe() const override;

  const Prior& prior() const { return prior_; }

 private:
  Prior prior_;
};

using GaussianDenoiser = AnalyticDenoiser<GaussianPrior>;
using MixtureDenoiser = AnalyticDenoiser<MixturePrior>;

/// D(rho) = rho. A denoiser that has learned nothing; with it the sampler
/// degenerates to a pure noise walk.
class IdentityDenoiser final : public Denoiser {
 public:
  LatentField denoise(const LatentField& rho_noisy, double sigma) const override;
  LatentField vjp(const LatentField& rho_noisy, double sigma,
                  const LatentField& cotangent) const override;
  std::string describe() const override { return "identity"; }
};

}  // namespace nnd
