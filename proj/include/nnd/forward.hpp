#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "nnd/field.hpp"

namespace nnd {

/// Measured data vector in photo-electron units, with the metadata needed to
/// reproduce it.
struct Measurement {
  Eigen::ArrayXd values;
  std::string fm_id;
  nlohmann::json fm_params;
  std::uint64_t seed = 0;
  double y_min = 1e-3;
};

/// Differentiable map from a physical field to measurement values.
/// apply() rejects fields with negative entries: no forward model here is
/// defined for a negative object.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::ArrayXd apply(const Field& x) const = 0;
  /// Pullback of a data-space cotangent to a field-shaped gradient.
  virtual Field vjp(const Field& x, const Eigen::ArrayXd& cotangent) const = 0;

  virtual std::int64_t data_size(const GridDims& dims, int channels) const = 0;
  virtual std::string id() const = 0;
  virtual nlohmann::json params() const { return nlohmann::json::object(); }
};

/// y = x flattened (raster order).
class IdentityModel final : public ForwardModel {
 public:
  Eigen::ArrayXd apply(const Field& x) const override;
  Field vjp(const Field& x, const Eigen::ArrayXd& cotangent) const override;
  std::int64_t data_size(const GridDims& dims, int channels) const override;
  std::string id() const override { return "identity"; }
};

/// Sums over one grid axis: one datum per (remaining voxel, channel) ray,
/// optionally weighted per ray. Datum order is the raster order of the
/// reduced grid, channel-minor.
class LinearProjectionModel final : public ForwardModel {
 public:
  explicit LinearProjectionModel(Axis axis, Eigen::ArrayXd ray_weights = {});

  Eigen::ArrayXd apply(const Field& x) const override;
  Field vjp(const Field& x, const Eigen::ArrayXd& cotangent) const override;
  std::int64_t data_size(const GridDims& dims, int channels) const override;
  std::string id() const override { return "linear_projection"; }
  nlohmann::json params() const override;

  Axis axis() const { return axis_; }

 private:
  Axis axis_;
  Eigen::ArrayXd ray_weights_;  // empty = unweighted
};

/// y_k = I0 * exp(-sum of x along the ray): attenuation along axis-aligned
/// rays, per channel. Nonlinear; exercises the full chain rule.
class BeerLambertModel final : public ForwardModel {
 public:
  BeerLambertModel(Axis axis, double i0);

  Eigen::ArrayXd apply(const Field& x) const override;
  Field vjp(const Field& x, const Eigen::ArrayXd& cotangent) const override;
  std::int64_t data_size(const GridDims& dims, int channels) const override;
  std::string id() const override { return "beer_lambert"; }
  nlohmann::json params() const override;

 private:
  Axis axis_;
  double i0_;
};

std::unique_ptr<ForwardModel> make_forward_model(const std::string& id,
                                                 const nlohmann::json& params);

enum class NoiseKind { Gaussian, Poisson };

/// y = clean + N(0, clean) per datum (variance equal to the expected count),
/// floored at y_min so downstream likelihoods stay defined. Poisson synthesis
/// is available for robustness experiments only.
Measurement add_photon_noise(const Eigen::ArrayXd& clean, std::uint64_t seed,
                             double y_min = 1e-3, NoiseKind kind = NoiseKind::Gaussian);

/// Sum over data of -(y_k - F_k(x))^2 / (2 y_k) - log(2 pi y_k)/2.
double log_likelihood(const Measurement& y, const Field& x, const ForwardModel& fm);

/// Ray-sum gradient helper shared by projection-style models. Exposed for
/// tests of the adjoint identity.
void validate_nonnegative(const Field& x, const char* who);

// Measurement container: 8-byte magic "NNDY0001", uint32le header length,
// JSON header {fm, params, seed, y_min, count}, then f64le values.
void write_measurement(const std::filesystem::path& path, const Measurement& m);
Measurement read_measurement(const std::filesystem::path& path);
void write_measurement_csv(const std::filesystem::path& path, const Measurement& m);

}  // namespace nnd
