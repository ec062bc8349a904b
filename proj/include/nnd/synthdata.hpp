#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnd/field.hpp"

namespace nnd {

/// Parameters of the synthetic blob corpus. Each scene contains 0-3 smooth
/// truncated-Gaussian blobs with lognormal peak amplitudes; values are exactly
/// zero outside blob support. Later channels are correlated with the first:
/// inside a blob the second channel grows with height, and the third grows
/// with the second.
struct BlobParams {
  int max_blobs = 3;
  double radius_lo = 1.2;           // in voxels, per axis
  double radius_hi = 2.8;
  double support_radius = 3.0;      // truncation, in units of the blob sigma
  double amplitude_log_std = 0.5;   // lognormal spread of peak amplitudes
  std::vector<double> channel_peak{0.3, 12.0, 150.0};  // nominal per-channel peaks
  double height_gain = 0.7;         // strength of the altitude trend
};

/// Deterministic per (seed, scene index); scenes pass through the f32
/// storage quantization so in-memory values match the files exactly.
Field make_blob_scene(GridDims dims, const std::vector<std::string>& channels,
                      const BlobParams& params, std::uint64_t seed, std::uint64_t scene_index);

std::vector<Field> make_blob_dataset(int n_scenes, GridDims dims,
                                     const std::vector<std::string>& channels,
                                     std::uint64_t seed, const BlobParams& params = {});

/// Writes scene_%05d.nndf files plus manifest.json (count, dims, channels,
/// seed, params, derived ScaleSpec, eps).
struct DatasetManifest {
  int count = 0;
  GridDims dims;
  std::vector<std::string> channels;
  std::uint64_t seed = 0;
  BlobParams params;
  ScaleSpec scale;
  double eps = 0.0;
};

void write_dataset(const std::filesystem::path& dir, const std::vector<Field>& scenes,
                   const DatasetManifest& manifest);

struct Dataset {
  std::vector<Field> scenes;
  DatasetManifest manifest;
};

Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace nnd
