#pragma once

#include <Eigen/Core>

#include <functional>

#include "nnd/common.hpp"

// Brute-force reference computations used to check the analytic and learned
// paths. Everything here is self-contained on purpose: quadrature, densities
// and metrics are written out directly rather than calling into the modules
// they verify.
namespace nnd::oracle {

/// Uniformly spaced 1D grid carrying sampled density values.
struct Grid1D {
  double lo = 0.0;
  double hi = 0.0;
  Eigen::ArrayXd values;

  int n() const { return static_cast<int>(values.size()); }
  double step() const { return (hi - lo) / (n() - 1); }
  double point(int i) const { return lo + i * step(); }
  Eigen::ArrayXd points() const {
    return Eigen::ArrayXd::LinSpaced(n(), lo, hi);
  }
};

/// Build a grid by sampling an (unnormalized) density and renormalizing it
/// with the trapezoid rule.
Grid1D make_density(double lo, double hi, int n, const std::function<double(double)>& density);

double trapezoid(const Grid1D& g);

/// Posterior mean E[rho | rho_noisy] for rho ~ prior (a density on the grid)
/// and rho_noisy = rho + N(0, sigma^2), by trapezoidal quadrature.
/// The prior must integrate to 1 within 1e-6; throws on normalizer underflow.
double posterior_mean(const Grid1D& prior, double rho_noisy, double sigma);

/// Pointwise prior(rho) * exp(-(y - F(exp(rho)))^2 / (2 y_var)), renormalized.
Grid1D bayes_posterior(const Grid1D& prior, const std::function<double(double)>& fm_of_x,
                       double y, double y_var);

double grid_mean(const Grid1D& density);
double grid_std(const Grid1D& density);

/// CDF values of a grid density at the grid points (trapezoid accumulation,
/// clamped to [0, 1]).
Eigen::ArrayXd grid_cdf(const Grid1D& density);

/// Central differences per coordinate.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& point, double step);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(Eigen::ArrayXd a, Eigen::ArrayXd b);

/// One-sample KS statistic against a reference CDF.
double ks_distance(Eigen::ArrayXd samples, const std::function<double(double)>& cdf);

/// Wasserstein-1 between two sample sets (area between empirical CDFs).
double wasserstein1(Eigen::ArrayXd a, Eigen::ArrayXd b);

/// Wasserstein-1 between samples and a grid density.
double wasserstein1(Eigen::ArrayXd samples, const Grid1D& density);

/// Standard normal pdf/cdf helpers for reference densities.
double normal_pdf(double x, double mean, double stddev);
double normal_cdf(double x, double mean, double stddev);

}  // namespace nnd::oracle
