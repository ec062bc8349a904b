#pragma once

#include <cmath>
#include <vector>

#include "nnd/field.hpp"

namespace nnd {

/// Stabilizer added before the log; keeps exact zeros representable as a
/// finite latent value (log(0 + eps) = log eps).
inline double default_eps() { return std::exp(-10.0); }

enum class ScaleDirection { Forward, Inverse };

/// rho = log(x + eps), element-wise. Rejects negative or non-finite input.
LatentField to_latent(const Field& x, double eps);

/// x = exp(rho), element-wise; strictly positive for finite rho.
/// Throws DivergenceError if any exponent overflows (a diverged run).
Field from_latent(const LatentField& rho);

/// Per-channel multiply (Forward) or divide (Inverse).
template <typename Tag>
Grid<double, Tag> apply_scale(const Grid<double, Tag>& x, const ScaleSpec& s,
                              ScaleDirection direction);

extern template Grid<double, tag::Physical> apply_scale(const Grid<double, tag::Physical>&,
                                                        const ScaleSpec&, ScaleDirection);
extern template Grid<double, tag::Latent> apply_scale(const Grid<double, tag::Latent>&,
                                                      const ScaleSpec&, ScaleDirection);

/// Scale choice used when a dataset does not dictate one: the factor maps
/// each channel's 95th percentile (nearest-rank, over every voxel of every
/// scene) to 1.0. Channels that are identically zero get factor 1.
ScaleSpec scale_from_percentile(const std::vector<Field>& dataset, double percentile = 0.95);

}  // namespace nnd
