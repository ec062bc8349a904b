#include "nnd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nnd::oracle {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
}

double normal_pdf(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return std::exp(-0.5 * z * z) / (kSqrt2Pi * stddev);
}

double normal_cdf(double x, double mean, double stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * 1.4142135623730950488));
}

Grid1D make_density(double lo, double hi, int n, const std::function<double(double)>& density) {
  if (n < 2 || !(hi > lo)) throw ValidationError("make_density: need n >= 2 and hi > lo");
  Grid1D g;
  g.lo = lo;
  g.hi = hi;
  g.values.resize(n);
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) g.values[i] = density(lo + i * h);
  const double z = trapezoid(g);
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw ValidationError("make_density: density does not normalize on the grid");
  }
  g.values /= z;
  return g;
}

double trapezoid(const Grid1D& g) {
  const int n = g.n();
  const double h = g.step();
  double sum = 0.5 * (g.values[0] + g.values[n - 1]);
  for (int i = 1; i < n - 1; ++i) sum += g.values[i];
  return sum * h;
}

double posterior_mean(const Grid1D& prior, double rho_noisy, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("posterior_mean: sigma must be positive");
  const double mass = trapezoid(prior);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw ValidationError("posterior_mean: prior does not integrate to 1 on the grid");
  }
  const int n = prior.n();
  const double h = prior.step();
  // accumulate with the largest exponent factored out to avoid underflow
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double rho = prior.lo + i * h;
    const double z = (rho_noisy - rho) / sigma;
    logw[static_cast<std::size_t>(i)] =
        prior.values[i] > 0.0 ? std::log(prior.values[i]) - 0.5 * z * z
                              : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, logw[static_cast<std::size_t>(i)]);
  }
  // if even the best grid point's weight would underflow a plain double
  // accumulation, the posterior mass lives off-grid and the quadrature is
  // meaningless
  if (!std::isfinite(max_log) || max_log < -700.0) {
    throw ValidationError("posterior_mean: normalizer underflow (grid too narrow)");
  }
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double rho = prior.lo + i * h;
    const double w = std::exp(logw[static_cast<std::size_t>(i)] - max_log) *
                     ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    num += w * rho;
    den += w;
  }
  if (!(den > 0.0)) {
    throw ValidationError("posterior_mean: normalizer underflow (grid too narrow)");
  }
  return num / den;
}

Grid1D bayes_posterior(const Grid1D& prior, const std::function<double(double)>& fm_of_x,
                       double y, double y_var) {
  if (!(y_var > 0.0)) throw ValidationError("bayes_posterior: y_var must be positive");
  Grid1D post = prior;
  const int n = prior.n();
  const double h = prior.step();
  Eigen::ArrayXd loglik(n);
  for (int i = 0; i < n; ++i) {
    const double rho = prior.lo + i * h;
    const double r = y - fm_of_x(std::exp(rho));
    loglik[i] = -0.5 * r * r / y_var;
  }
  const double m = loglik.maxCoeff();
  post.values = prior.values * (loglik - m).exp();
  const double z = trapezoid(post);
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw ValidationError("bayes_posterior: zero normalizer on the grid");
  }
  post.values /= z;
  return post;
}

double grid_mean(const Grid1D& density) {
  Grid1D weighted = density;
  weighted.values *= density.points();
  return trapezoid(weighted);
}

double grid_std(const Grid1D& density) {
  const double m = grid_mean(density);
  Grid1D weighted = density;
  weighted.values *= (density.points() - m).square();
  return std::sqrt(trapezoid(weighted));
}

Eigen::ArrayXd grid_cdf(const Grid1D& density) {
  const int n = density.n();
  const double h = density.step();
  Eigen::ArrayXd cdf(n);
  cdf[0] = 0.0;
  for (int i = 1; i < n; ++i) {
    cdf[i] = cdf[i - 1] + 0.5 * (density.values[i - 1] + density.values[i]) * h;
  }
  return cdf.min(1.0).max(0.0);
}

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& point, double step) {
  if (!(step > 0.0)) throw ValidationError("finite_diff_grad: step must be positive");
  Eigen::VectorXd g(point.size());
  Eigen::VectorXd p = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double x0 = p[i];
    p[i] = x0 + step;
    const double fp = f(p);
    p[i] = x0 - step;
    const double fm = f(p);
    p[i] = x0;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

namespace {

void require_samples(const Eigen::ArrayXd& s, const char* who) {
  if (s.size() == 0) throw ValidationError(std::string(who) + ": empty sample set");
}

}  // namespace

double ks_distance(Eigen::ArrayXd a, Eigen::ArrayXd b) {
  require_samples(a, "ks_distance");
  require_samples(b, "ks_distance");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = a.size(), nb = b.size();
  double d = 0.0;
  Eigen::Index i = 0, j = 0;
  while (i < na && j < nb) {
    const double x = std::min(a[i], b[j]);
    while (i < na && a[i] == x) ++i;  // consume ties on both sides together
    while (j < nb && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_distance(Eigen::ArrayXd samples, const std::function<double(double)>& cdf) {
  require_samples(samples, "ks_distance");
  std::sort(samples.begin(), samples.end());
  const auto n = samples.size();
  double d = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = cdf(samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
    d = std::max(d, std::abs(static_cast<double>(i) / n - c));
  }
  return d;
}

double wasserstein1(Eigen::ArrayXd a, Eigen::ArrayXd b) {
  require_samples(a, "wasserstein1");
  require_samples(b, "wasserstein1");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    return (a - b).abs().mean();
  }
  // area between the two empirical CDFs, integrated over the merged support
  const auto na = a.size(), nb = b.size();
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(na + nb));
  pts.insert(pts.end(), a.begin(), a.end());
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  double w = 0.0;
  Eigen::Index i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    while (i < na && a[i] <= pts[k]) ++i;
    while (j < nb && b[j] <= pts[k]) ++j;
    const double fa = static_cast<double>(i) / na;
    const double fb = static_cast<double>(j) / nb;
    w += std::abs(fa - fb) * (pts[k + 1] - pts[k]);
  }
  return w;
}

double wasserstein1(Eigen::ArrayXd samples, const Grid1D& density) {
  require_samples(samples, "wasserstein1");
  std::sort(samples.begin(), samples.end());
  const Eigen::ArrayXd ref_cdf = grid_cdf(density);
  const auto n = samples.size();
  // integrate |F_emp - F_ref| over the union of supports on a merged grid
  const double lo = std::min(density.lo, samples[0]);
  const double hi = std::max(density.hi, samples[n - 1]);
  const int m = std::max(4 * density.n(), 4096);
  const double h = (hi - lo) / m;
  double w = 0.0;
  Eigen::Index i = 0;
  for (int k = 0; k < m; ++k) {
    const double x = lo + (k + 0.5) * h;
    while (i < n && samples[i] <= x) ++i;
    const double fe = static_cast<double>(i) / n;
    double fr;
    if (x <= density.lo) {
      fr = 0.0;
    } else if (x >= density.hi) {
      fr = 1.0;
    } else {
      const double u = (x - density.lo) / density.step();
      const int idx = std::min(static_cast<int>(u), density.n() - 2);
      const double frac = u - idx;
      fr = ref_cdf[idx] * (1.0 - frac) + ref_cdf[idx + 1] * frac;
    }
    w += std::abs(fe - fr) * h;
  }
  return w;
}

}  // namespace nnd::oracle
