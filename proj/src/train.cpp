#include "nnd/train.hpp"

#include <cmath>
#include <sstream>

#include "nnd/latent.hpp"
#include "nnd/parallel.hpp"
#include "nnd/rng.hpp"

namespace nnd {

namespace {

struct Draw {
  std::int64_t scene = 0;
  int sigma_index = 0;  // 1-based
};

/// Validation tuples are fixed up front so the held-out loss is a pure
/// function of theta.
struct ValidationSet {
  std::vector<std::int64_t> scene;
  std::vector<double> sigma;
  std::vector<Eigen::ArrayXd> noisy;
  double identity_loss = 0.0;
  double mid_sigma = 0.0;
  std::vector<std::size_t> mid_sigma_items;
};

}  // namespace

TrainResult train(NeuralDenoiser& net, const std::vector<Field>& dataset,
                  const TrainSigmas& sigmas, const TrainOptions& opts) {
  if (dataset.empty()) throw ValidationError("train: dataset is empty");
  if (opts.batch < 1) throw ValidationError("train: batch must be >= 1");
  if (opts.steps < 0) throw ValidationError("train: steps must be >= 0");
  if (!(opts.lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (opts.weight_decay < 0.0) throw ValidationError("train: weight decay must be >= 0");
  if (opts.validation_scenes >= static_cast<int>(dataset.size())) {
    throw ValidationError("train: validation split leaves no training scenes");
  }

  const auto& meta = net.metadata();
  const GridDims dims = dataset.front().dims;
  const double eps = meta.eps > 0.0 ? meta.eps : default_eps();

  // precompute clean latents: scale to model units, then log(x + eps)
  std::vector<Eigen::ArrayXd> latents;
  latents.reserve(dataset.size());
  for (const auto& scene : dataset) {
    if (!scene.same_shape(dims, dataset.front().channels)) {
      throw ValidationError("train: dataset scenes disagree on dims/channels");
    }
    if (scene.channels != meta.channels) {
      throw ValidationError("train: dataset channels do not match model metadata");
    }
    const Field scaled = apply_scale(scene, meta.scale, ScaleDirection::Forward);
    latents.push_back(to_latent(scaled, eps).values);
  }

  const std::int64_t n_train =
      static_cast<std::int64_t>(latents.size()) - opts.validation_scenes;
  const auto n_elems = latents.front().size();

  // held-out set: fixed scenes from the tail, fixed sigmas and noise
  ValidationSet val;
  if (opts.validation_scenes > 0) {
    rng::Stream vstream(opts.seed, rng::StreamKind::Validation, 0);
    // mid-range sigma: the geometric midpoint of the training levels
    val.mid_sigma = sigmas.at((sigmas.L + 1) / 2);
    for (int k = 0; k < opts.validation_scenes; ++k) {
      const std::int64_t scene = n_train + k;
      // alternate the mid level with random levels for coverage
      const bool mid = (k % 2) == 0;
      const int i = mid ? (sigmas.L + 1) / 2 : static_cast<int>(vstream.below(sigmas.L)) + 1;
      const double sigma = sigmas.at(i);
      Eigen::ArrayXd noisy = latents[static_cast<std::size_t>(scene)];
      for (Eigen::Index e = 0; e < noisy.size(); ++e) noisy[e] += sigma * vstream.normal();
      if (mid) val.mid_sigma_items.push_back(val.scene.size());
      val.scene.push_back(scene);
      val.sigma.push_back(sigma);
      val.noisy.push_back(std::move(noisy));
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < val.scene.size(); ++k) {
      acc += (val.noisy[k] - latents[static_cast<std::size_t>(val.scene[k])]).square().mean();
    }
    val.identity_loss = acc / static_cast<double>(val.scene.size());
  }

  const auto validate = [&]() {
    std::vector<double> losses(val.scene.size());
    parallel_for(
        static_cast<std::int64_t>(val.scene.size()),
        [&](std::int64_t k) {
          const auto out =
              net.forward(dims, val.noisy[static_cast<std::size_t>(k)],
                          val.sigma[static_cast<std::size_t>(k)]);
          losses[static_cast<std::size_t>(k)] =
              (out - latents[static_cast<std::size_t>(val.scene[static_cast<std::size_t>(k)])])
                  .square()
                  .mean();
        },
        opts.threads);
    double acc = 0.0;
    for (const double l : losses) acc += l;
    return acc / static_cast<double>(losses.size());
  };

  const auto mid_sigma_mse = [&](bool identity) {
    double acc = 0.0;
    for (const auto item : val.mid_sigma_items) {
      const auto& clean = latents[static_cast<std::size_t>(val.scene[item])];
      if (identity) {
        acc += (val.noisy[item] - clean).square().mean();
      } else {
        acc += (net.forward(dims, val.noisy[item], val.sigma[item]) - clean).square().mean();
      }
    }
    return acc / static_cast<double>(val.mid_sigma_items.size());
  };

  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(opts.steps));

  AdamState& adam = net.adam_state();
  const AdamParams& ap = meta.adam;
  double initial_validation = -1.0;
  if (opts.validation_scenes > 0) {
    const double v0 = validate();
    initial_validation = v0;
    result.validation.push_back({0, v0, val.identity_loss});
  }

  std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(opts.batch));
  std::vector<double> losses(static_cast<std::size_t>(opts.batch));
  std::vector<Draw> draws(static_cast<std::size_t>(opts.batch));

  for (int step = 0; step < opts.steps; ++step) {
    rng::Stream step_stream(opts.seed, rng::StreamKind::TrainStep,
                            static_cast<std::uint64_t>(step));
    for (int b = 0; b < opts.batch; ++b) {
      draws[static_cast<std::size_t>(b)] = {
          static_cast<std::int64_t>(step_stream.below(static_cast<std::uint64_t>(n_train))),
          static_cast<int>(step_stream.below(static_cast<std::uint64_t>(sigmas.L))) + 1};
    }

    parallel_for(
        opts.batch,
        [&](std::int64_t b) {
          const Draw d = draws[static_cast<std::size_t>(b)];
          const double sigma = sigmas.at(d.sigma_index);
          const auto& clean = latents[static_cast<std::size_t>(d.scene)];
          // per-element noise substream: reproducible regardless of threading
          rng::Stream noise(opts.seed, rng::StreamKind::TrainNoise,
                            static_cast<std::uint64_t>(step) *
                                    static_cast<std::uint64_t>(opts.batch) +
                                static_cast<std::uint64_t>(b));
          Eigen::ArrayXd noisy(n_elems);
          for (Eigen::Index e = 0; e < n_elems; ++e) noisy[e] = clean[e] + sigma * noise.normal();
          auto& grad = grads[static_cast<std::size_t>(b)];
          grad.setZero(net.param_count());
          losses[static_cast<std::size_t>(b)] =
              net.loss_and_param_grad(dims, clean, noisy, sigma, grad);
        },
        opts.threads);

    // fixed-order reduction keeps runs bit-reproducible
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
    double loss = 0.0;
    for (int b = 0; b < opts.batch; ++b) {
      grad += grads[static_cast<std::size_t>(b)];
      loss += losses[static_cast<std::size_t>(b)];
    }
    const double inv_b = 1.0 / static_cast<double>(opts.batch);
    grad *= inv_b;
    loss *= inv_b;

    if (!std::isfinite(loss)) {
      std::ostringstream oss;
      oss << "train: non-finite loss at step " << step << " (sigma indices:";
      for (const auto& d : draws) oss << ' ' << d.sigma_index;
      oss << "; scene ids:";
      for (const auto& d : draws) oss << ' ' << d.scene;
      oss << ")";
      throw DivergenceError(oss.str());
    }
    result.loss_trace.push_back(loss);

    // ADAM with decoupled weight decay
    adam.step += 1;
    adam.m = ap.beta1 * adam.m + (1.0 - ap.beta1) * grad;
    adam.v = ap.beta2 * adam.v.array().matrix() +
             (1.0 - ap.beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(adam.step));
    net.params().array() -=
        opts.lr * (adam.m.array() / bc1) / ((adam.v.array() / bc2).sqrt() + ap.eps);
    if (opts.weight_decay > 0.0) {
      net.params() *= (1.0 - opts.lr * opts.weight_decay);
    }

    result.steps_run = step + 1;

    if (opts.validation_scenes > 0 && (step + 1) % opts.validation_every == 0) {
      const double v = validate();
      result.validation.push_back({step + 1, v, val.identity_loss});
      if (opts.stop_at_validation_ratio > 0.0 &&
          v <= opts.stop_at_validation_ratio * initial_validation &&
          mid_sigma_mse(false) < mid_sigma_mse(true)) {
        break;
      }
    }
  }
  return result;
}

}  // namespace nnd
