#include "nnd/latent.hpp"

#include <algorithm>
#include <cmath>

#include "nnd/common.hpp"

namespace nnd {

LatentField to_latent(const Field& x, double eps) {
  if (!(eps > 0.0)) throw ValidationError("to_latent: eps must be positive");
  if (!x.values.isFinite().all()) {
    throw ValidationError("to_latent: field contains non-finite values (corrupt dataset)");
  }
  if ((x.values < 0.0).any()) {
    throw ValidationError("to_latent: field contains negative values (corrupt dataset)");
  }
  LatentField rho;
  rho.dims = x.dims;
  rho.channels = x.channels;
  rho.values = (x.values + eps).log();
  return rho;
}

Field from_latent(const LatentField& rho) {
  if (!rho.values.isFinite().all()) {
    throw ValidationError("from_latent: latent contains non-finite values");
  }
  Field x;
  x.dims = rho.dims;
  x.channels = rho.channels;
  x.values = rho.values.exp();
  if (!x.values.isFinite().all()) {
    throw DivergenceError("from_latent: exp overflow (latent exceeds representable range; "
                          "sampler run diverged)");
  }
  return x;
}

template <typename Tag>
Grid<double, Tag> apply_scale(const Grid<double, Tag>& x, const ScaleSpec& s,
                              ScaleDirection direction) {
  const int C = x.channel_count();
  Eigen::ArrayXd per_channel(C);
  for (int c = 0; c < C; ++c) {
    const double f = s.factor(x.channels[c]);  // throws on unknown channel
    per_channel[c] = direction == ScaleDirection::Forward ? f : 1.0 / f;
  }
  Grid<double, Tag> out = x;
  if (C == 1) {
    out.values *= per_channel[0];
    return out;
  }
  // channel-minor layout: reshape to (C x voxels) and scale rows
  Eigen::Map<Eigen::ArrayXXd> m(out.values.data(), C, x.dims.voxels());
  m.colwise() *= per_channel;
  return out;
}

template Grid<double, tag::Physical> apply_scale(const Grid<double, tag::Physical>&,
                                                 const ScaleSpec&, ScaleDirection);
template Grid<double, tag::Latent> apply_scale(const Grid<double, tag::Latent>&,
                                               const ScaleSpec&, ScaleDirection);

ScaleSpec scale_from_percentile(const std::vector<Field>& dataset, double percentile) {
  if (dataset.empty()) throw ValidationError("scale_from_percentile: empty dataset");
  if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw ValidationError("scale_from_percentile: percentile must be in (0, 1]");
  }
  const auto& channels = dataset.front().channels;
  const int C = static_cast<int>(channels.size());

  ScaleSpec spec;
  for (int c = 0; c < C; ++c) {
    std::vector<double> pool;
    for (const auto& f : dataset) {
      if (f.channels != channels) {
        throw ValidationError("scale_from_percentile: inconsistent channels across dataset");
      }
      const std::int64_t n = f.dims.voxels();
      pool.reserve(pool.size() + static_cast<std::size_t>(n));
      for (std::int64_t v = 0; v < n; ++v) {
        pool.push_back(f.values[v * C + c]);
      }
    }
    // nearest-rank percentile
    const std::size_t rank =
        std::min(pool.size() - 1,
                 static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(pool.size()))) -
                     1);
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(rank), pool.end());
    const double p = pool[rank];
    spec.factors[channels[c]] = p > 0.0 ? 1.0 / p : 1.0;
  }
  return spec;
}

}  // namespace nnd
