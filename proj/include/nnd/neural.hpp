#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnd/denoise.hpp"
#include "nnd/field.hpp"
#include "nnd/schedule.hpp"

namespace nnd {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;  // first moments
  Eigen::VectorXd v;  // second moments
  std::int64_t step = 0;
};

/// Small fixed convolutional denoiser for desk-scale volumes.
///
/// Architecture: the latent grid is concatenated with one constant channel
/// holding log(sigma), then passed through three 3x3x3 convolutions
/// (C+1 -> 16 -> 16 -> C) with replicate border padding, softplus on the two
/// hidden layers and a linear output. Gradients (both w.r.t. parameters and
/// w.r.t. the input) are hand-derived reverse-mode rules, checked against
/// finite differences in the tests.
class NeuralDenoiser final : public Denoiser {
 public:
  static constexpr int kHidden = 16;
  static constexpr int kKernel = 3;

  struct Metadata {
    std::vector<std::string> channels;
    double eps = 0.0;
    ScaleSpec scale;
    int sigma_levels = 0;       // L
    double sigma_lo = 0.0;      // training sigma endpoints
    double sigma_hi = 0.0;
    AdamParams adam;
    std::uint64_t init_seed = 0;
  };

  explicit NeuralDenoiser(Metadata meta);

  int channel_count() const { return static_cast<int>(meta_.channels.size()); }
  Eigen::Index param_count() const { return theta_.size(); }

  const Eigen::VectorXd& params() const { return theta_; }
  Eigen::VectorXd& params() { return theta_; }

  /// He-style normal init (hidden gain sqrt(2/fan_in), output layer scaled
  /// down 100x), biases zero. Records the seed in the metadata.
  void init_params(std::uint64_t seed);

  const Metadata& metadata() const { return meta_; }
  AdamState& adam_state() { return adam_; }
  const AdamState& adam_state() const { return adam_; }

  // Denoiser interface ------------------------------------------------------
  LatentField denoise(const LatentField& rho_noisy, double sigma) const override;
  LatentField vjp(const LatentField& rho_noisy, double sigma,
                  const LatentField& cotangent) const override;
  std::unique_ptr<Eval> evaluate(const LatentField& rho_noisy, double sigma) const override;
  std::string describe() const override;

  // Training-facing ----------------------------------------------------------
  /// Squared-error loss mean((clean - D(noisy))^2) over the grid, plus the
  /// gradient w.r.t. theta (accumulated into grad, which must be zeroed by
  /// the caller if a fresh gradient is wanted).
  double loss_and_param_grad(const GridDims& dims, const Eigen::ArrayXd& clean,
                             const Eigen::ArrayXd& noisy, double sigma,
                             Eigen::VectorXd& grad) const;

  /// Forward pass on a raw value array (channel-minor raster).
  Eigen::ArrayXd forward(const GridDims& dims, const Eigen::ArrayXd& noisy, double sigma) const;

  // NNDM v1 container: magic "NNDM0001", uint32le header length, JSON header
  // (architecture, channels, eps, scale, sigma config, adam, seed), then
  // theta as f64le.
  void save(const std::filesystem::path& path) const;
  static NeuralDenoiser load(const std::filesystem::path& path);

  static Eigen::Index param_count_for(int channels);

 private:
  Metadata meta_;
  Eigen::VectorXd theta_;
  AdamState adam_;
};

}  // namespace nnd
