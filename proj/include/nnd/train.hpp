#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nnd/field.hpp"
#include "nnd/neural.hpp"
#include "nnd/schedule.hpp"

namespace nnd {

struct TrainOptions {
  int batch = 32;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int steps = 5000;
  std::uint64_t seed = 0;
  int validation_scenes = 0;  // held out from the tail of the dataset
  int validation_every = 100;
  /// If > 0, stop once validation loss has dropped to this fraction of its
  /// initial value AND the denoiser beats the identity map on the held-out
  /// set at mid-range sigma. 0 disables early stopping.
  double stop_at_validation_ratio = 0.0;
  int threads = 0;  // 0 = NND_THREADS / hardware
};

struct ValidationPoint {
  int step = 0;
  double loss = 0.0;           // MSE(D(rho_noisy), rho_clean) on the held-out set
  double identity_loss = 0.0;  // MSE(rho_noisy, rho_clean), the no-learning baseline
};

struct TrainResult {
  std::vector<double> loss_trace;  // one entry per optimizer step
  std::vector<ValidationPoint> validation;
  int steps_run = 0;
};

/// Denoiser training loop: per batch element, pick a scene uniformly, pick a
/// noise level i uniformly from the training sigmas, corrupt the latent with
/// N(0, sigma_i^2), and descend the squared reconstruction error with ADAM
/// plus decoupled weight decay. Deterministic per seed, independent of the
/// worker count.
///
/// Scenes are physical fields; they are scaled with the model's ScaleSpec
/// and log-transformed with its eps before training.
TrainResult train(NeuralDenoiser& net, const std::vector<Field>& dataset,
                  const TrainSigmas& sigmas, const TrainOptions& opts);

}  // namespace nnd
