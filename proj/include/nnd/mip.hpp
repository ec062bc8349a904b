#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>

#include "nnd/field.hpp"

namespace nnd {

/// Maximum intensity projection of one channel along an axis.
/// Row/column layout of the image: axis z -> (ny rows, nx cols),
/// axis y -> (nz, nx), axis x -> (nz, ny).
Eigen::MatrixXd mip(const Field& field, int channel, Axis axis);

/// Binary PGM (P5, maxval 65535, big-endian samples per the format), with
/// pixel = round(65535 * (v / max)^(1/gamma)). A sidecar JSON records the
/// normalization so intensities can be recovered.
void write_pgm16(const std::filesystem::path& path, const Eigen::MatrixXd& image,
                 double max_value, double gamma);

struct MipOutput {
  std::filesystem::path pgm;
  std::filesystem::path sidecar;
  double max_value = 0.0;
};

/// MIP one channel and write image + sidecar; `stem` names the outputs
/// (<stem>.pgm, <stem>.json).
MipOutput render_mip_channel(const Field& field, int channel, Axis axis, double gamma,
                             const std::filesystem::path& dir, const std::string& stem);

}  // namespace nnd
