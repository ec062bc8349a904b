#include "nnd/denoise.hpp"

#include <cmath>
#include <limits>

#include "nnd/common.hpp"

namespace nnd {

std::unique_ptr<Denoiser::Eval> Denoiser::evaluate(const LatentField& rho_noisy,
                                                   double sigma) const {
  // generic fallback: recomputes the forward pass inside pullback
  class PlainEval final : public Eval {
   public:
    PlainEval(const Denoiser& d, LatentField in, double sigma, LatentField out)
        : denoiser_(d), input_(std::move(in)), sigma_(sigma), output_(std::move(out)) {}
    const LatentField& output() const override { return output_; }
    LatentField pullback(const LatentField& cotangent) const override {
      return denoiser_.vjp(input_, sigma_, cotangent);
    }

   private:
    const Denoiser& denoiser_;
    LatentField input_;
    double sigma_;
    LatentField output_;
  };
  return std::make_unique<PlainEval>(*this, rho_noisy, sigma, denoise(rho_noisy, sigma));
}

void validate(const GaussianPrior& p) {
  if (!(p.stddev > 0.0)) throw ValidationError("GaussianPrior: stddev must be positive");
  if (!std::isfinite(p.mean)) throw ValidationError("GaussianPrior: mean must be finite");
}

void validate(const MixturePrior& p) {
  if (p.components.empty()) throw ValidationError("MixturePrior: no components");
  double wsum = 0.0;
  for (const auto& c : p.components) {
    if (!(c.weight > 0.0)) throw ValidationError("MixturePrior: weights must be positive");
    if (!(c.stddev > 0.0)) throw ValidationError("MixturePrior: stddevs must be positive");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw ValidationError("MixturePrior: weights must sum to 1");
  }
}

namespace {

void require_sigma(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("analytic denoiser: sigma must be positive");
}

}  // namespace

Eigen::ArrayXd analytic_denoise(const GaussianPrior& p, const Eigen::ArrayXd& rho_noisy,
                                double sigma) {
  require_sigma(sigma);
  const double s2 = p.stddev * p.stddev;
  const double v = s2 + sigma * sigma;
  return (s2 * rho_noisy + sigma * sigma * p.mean) / v;
}

Eigen::ArrayXd analytic_denoise_deriv(const GaussianPrior& p, const Eigen::ArrayXd& rho_noisy,
                                      double sigma) {
  require_sigma(sigma);
  const double s2 = p.stddev * p.stddev;
  return Eigen::ArrayXd::Constant(rho_noisy.size(), s2 / (s2 + sigma * sigma));
}

namespace {

// Shared responsibility computation for the mixture posterior mean and its
// derivative. Log-domain with the max factored out keeps far tails stable.
struct MixtureEval {
  Eigen::ArrayXd mean;   // D(rho)
  Eigen::ArrayXd deriv;  // dD/drho
};

MixtureEval mixture_eval(const MixturePrior& p, const Eigen::ArrayXd& rho, double sigma) {
  const auto k = p.components.size();
  const auto n = rho.size();
  const double sig2 = sigma * sigma;

  Eigen::ArrayXXd logw(n, k), pm(n, k), gd(n, k);
  Eigen::ArrayXd pmd(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& c = p.components[j];
    const double s2 = c.stddev * c.stddev;
    const double v = s2 + sig2;
    logw.col(j) = std::log(c.weight) - 0.5 * std::log(v) -
                  (rho - c.mean).square() / (2.0 * v);
    pm.col(j) = (s2 * rho + sig2 * c.mean) / v;  // per-component posterior mean
    pmd[static_cast<Eigen::Index>(j)] = s2 / v;  // and its derivative
    gd.col(j) = -(rho - c.mean) / v;             // d log-responsibility numerator
  }

  const Eigen::ArrayXd m = logw.rowwise().maxCoeff();
  Eigen::ArrayXXd r = (logw.colwise() - m).exp();
  const Eigen::ArrayXd z = r.rowwise().sum();
  r.colwise() /= z;

  MixtureEval out;
  out.mean = (r * pm).rowwise().sum();
  const Eigen::ArrayXd gbar = (r * gd).rowwise().sum();
  // d/drho sum_j r_j pm_j = sum_j r_j (pm_j' + pm_j (g_j' - gbar'))
  Eigen::ArrayXXd term = pm;
  for (std::size_t j = 0; j < k; ++j) {
    term.col(j) = pmd[static_cast<Eigen::Index>(j)] + pm.col(j) * (gd.col(j) - gbar);
  }
  out.deriv = (r * term).rowwise().sum();
  return out;
}

}  // namespace

Eigen::ArrayXd analytic_denoise(const MixturePrior& p, const Eigen::ArrayXd& rho_noisy,
                                double sigma) {
  require_sigma(sigma);
  validate(p);
  return mixture_eval(p, rho_noisy, sigma).mean;
}

Eigen::ArrayXd analytic_denoise_deriv(const MixturePrior& p, const Eigen::ArrayXd& rho_noisy,
                                      double sigma) {
  require_sigma(sigma);
  validate(p);
  return mixture_eval(p, rho_noisy, sigma).deriv;
}

double marginal_pdf(const GaussianPrior& p, double rho_noisy, double sigma) {
  const double v = p.stddev * p.stddev + sigma * sigma;
  const double z = rho_noisy - p.mean;
  return std::exp(-0.5 * z * z / v) / std::sqrt(2.0 * M_PI * v);
}

double marginal_cdf(const MixturePrior& p, double rho_noisy, double sigma) {
  double acc = 0.0;
  for (const auto& c : p.components) {
    const double sd = std::sqrt(c.stddev * c.stddev + sigma * sigma);
    acc += c.weight * 0.5 * std::erfc(-(rho_noisy - c.mean) / (sd * 1.4142135623730950488));
  }
  return acc;
}

// --- AnalyticDenoiser -------------------------------------------------------

namespace {

template <typename Prior>
class AnalyticEval final : public Denoiser::Eval {
 public:
  AnalyticEval(LatentField out, Eigen::ArrayXd deriv)
      : output_(std::move(out)), deriv_(std::move(deriv)) {}
  const LatentField& output() const override { return output_; }
  LatentField pullback(const LatentField& cotangent) const override {
    LatentField g = cotangent;
    g.values *= deriv_;
    return g;
  }

 private:
  LatentField output_;
  Eigen::ArrayXd deriv_;
};

}  // namespace

template <typename Prior>
AnalyticDenoiser<Prior>::AnalyticDenoiser(Prior prior) : prior_(std::move(prior)) {
  validate(prior_);
}

template <typename Prior>
LatentField AnalyticDenoiser<Prior>::denoise(const LatentField& rho_noisy, double sigma) const {
  LatentField out = rho_noisy;
  out.values = analytic_denoise(prior_, rho_noisy.values, sigma);
  return out;
}

template <typename Prior>
LatentField AnalyticDenoiser<Prior>::vjp(const LatentField& rho_noisy, double sigma,
                                         const LatentField& cotangent) const {
  LatentField out = cotangent;
  out.values = cotangent.values * analytic_denoise_deriv(prior_, rho_noisy.values, sigma);
  return out;
}

template <typename Prior>
std::unique_ptr<Denoiser::Eval> AnalyticDenoiser<Prior>::evaluate(const LatentField& rho_noisy,
                                                                  double sigma) const {
  LatentField out = rho_noisy;
  if constexpr (std::is_same_v<Prior, MixturePrior>) {
    auto ev = mixture_eval(prior_, rho_noisy.values, sigma);
    out.values = std::move(ev.mean);
    return std::make_unique<AnalyticEval<Prior>>(std::move(out), std::move(ev.deriv));
  } else {
    out.values = analytic_denoise(prior_, rho_noisy.values, sigma);
    return std::make_unique<AnalyticEval<Prior>>(
        std::move(out), analytic_denoise_deriv(prior_, rho_noisy.values, sigma));
  }
}

template <typename Prior>
std::string AnalyticDenoiser<Prior>::describe() const {
  if constexpr (std::is_same_v<Prior, MixturePrior>) {
    return "analytic-mixture(k=" + std::to_string(prior_.components.size()) + ")";
  } else {
    return "analytic-gaussian";
  }
}

template class AnalyticDenoiser<GaussianPrior>;
template class AnalyticDenoiser<MixturePrior>;

LatentField IdentityDenoiser::denoise(const LatentField& rho_noisy, double /*sigma*/) const {
  return rho_noisy;
}

LatentField IdentityDenoiser::vjp(const LatentField& /*rho_noisy*/, double /*sigma*/,
                                  const LatentField& cotangent) const {
  return cotangent;
}

}  // namespace nnd
