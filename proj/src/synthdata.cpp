#include "nnd/synthdata.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

#include "nnd/latent.hpp"
#include "nnd/rng.hpp"

namespace nnd {

using json = nlohmann::json;

namespace {

struct Blob {
  double cz, cy, cx;
  double rz, ry, rx;
  double amplitude;
};

}  // namespace

Field make_blob_scene(GridDims dims, const std::vector<std::string>& channels,
                      const BlobParams& params, std::uint64_t seed, std::uint64_t scene_index) {
  const int C = static_cast<int>(channels.size());
  if (C == 0) throw ValidationError("make_blob_scene: no channels");
  if (static_cast<int>(params.channel_peak.size()) < C) {
    throw ValidationError("make_blob_scene: channel_peak shorter than channel list");
  }

  rng::Stream stream(seed, rng::StreamKind::DatasetScene, scene_index);
  const int n_blobs = static_cast<int>(stream.below(static_cast<std::uint64_t>(params.max_blobs) + 1));

  std::vector<Blob> blobs(static_cast<std::size_t>(n_blobs));
  for (auto& b : blobs) {
    b.cz = stream.uniform() * dims.nz;
    b.cy = stream.uniform() * dims.ny;
    b.cx = stream.uniform() * dims.nx;
    const auto radius = [&] {
      return params.radius_lo + stream.uniform() * (params.radius_hi - params.radius_lo);
    };
    b.rz = radius();
    b.ry = radius();
    b.rx = radius();
    b.amplitude = std::exp(params.amplitude_log_std * stream.normal());
  }

  Field scene(dims, channels);
  const double support2 = params.support_radius * params.support_radius;
  for (const auto& b : blobs) {
    for (int z = 0; z < dims.nz; ++z) {
      const double dz = (z - b.cz) / b.rz;
      for (int y = 0; y < dims.ny; ++y) {
        const double dy = (y - b.cy) / b.ry;
        for (int x = 0; x < dims.nx; ++x) {
          const double dx = (x - b.cx) / b.rx;
          const double d2 = dz * dz + dy * dy + dx * dx;
          if (d2 > support2) continue;  // exact zero outside support
          const double profile = b.amplitude * std::exp(-0.5 * d2);
          // altitude fraction within the blob's vertical support
          const double h = std::clamp(
              (z - (b.cz - params.support_radius * b.rz)) /
                  (2.0 * params.support_radius * b.rz),
              0.0, 1.0);
          for (int c = 0; c < C; ++c) {
            double trend = 1.0;
            if (c >= 1) trend *= 1.0 - params.height_gain + params.height_gain * 2.0 * h;
            if (c >= 2) trend *= trend;  // third channel grows with the second
            scene.at(z, y, x, c) += params.channel_peak[static_cast<std::size_t>(c)] *
                                    profile * trend;
          }
        }
      }
    }
  }
  quantize_f32(scene);
  return scene;
}

std::vector<Field> make_blob_dataset(int n_scenes, GridDims dims,
                                     const std::vector<std::string>& channels,
                                     std::uint64_t seed, const BlobParams& params) {
  if (n_scenes < 0) throw ValidationError("make_blob_dataset: n_scenes must be >= 0");
  std::vector<Field> scenes;
  scenes.reserve(static_cast<std::size_t>(n_scenes));
  for (int s = 0; s < n_scenes; ++s) {
    scenes.push_back(make_blob_scene(dims, channels, params, seed,
                                     static_cast<std::uint64_t>(s)));
  }
  return scenes;
}

namespace {

json params_to_json(const BlobParams& p) {
  return json{{"max_blobs", p.max_blobs},
              {"radius_lo", p.radius_lo},
              {"radius_hi", p.radius_hi},
              {"support_radius", p.support_radius},
              {"amplitude_log_std", p.amplitude_log_std},
              {"channel_peak", p.channel_peak},
              {"height_gain", p.height_gain}};
}

BlobParams params_from_json(const json& j) {
  BlobParams p;
  p.max_blobs = j.at("max_blobs").get<int>();
  p.radius_lo = j.at("radius_lo").get<double>();
  p.radius_hi = j.at("radius_hi").get<double>();
  p.support_radius = j.at("support_radius").get<double>();
  p.amplitude_log_std = j.at("amplitude_log_std").get<double>();
  p.channel_peak = j.at("channel_peak").get<std::vector<double>>();
  p.height_gain = j.at("height_gain").get<double>();
  return p;
}

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%05d.nndf", index);
  return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<Field>& scenes,
                   const DatasetManifest& manifest) {
  std::filesystem::create_directories(dir);
  json m;
  m["count"] = manifest.count;
  m["dims"] = {manifest.dims.nz, manifest.dims.ny, manifest.dims.nx};
  m["channels"] = manifest.channels;
  m["seed"] = manifest.seed;
  m["params"] = params_to_json(manifest.params);
  json scale = json::object();
  for (const auto& [name, factor] : manifest.scale.factors) scale[name] = factor;
  m["scale"] = scale;
  m["eps"] = manifest.eps;

  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot open for writing: " + (dir / "manifest.json").string());
  os << m.dump(2) << "\n";

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    write_nndf(dir / scene_name(static_cast<int>(s)), scenes[s], manifest.scale, manifest.eps);
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("cannot open: " + (dir / "manifest.json").string());
  json m;
  try {
    is >> m;
  } catch (const json::exception& e) {
    throw IoError("malformed dataset manifest: " + std::string(e.what()));
  }

  Dataset out;
  try {
    out.manifest.count = m.at("count").get<int>();
    const auto dims = m.at("dims");
    out.manifest.dims = {dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>()};
    out.manifest.channels = m.at("channels").get<std::vector<std::string>>();
    out.manifest.seed = m.at("seed").get<std::uint64_t>();
    out.manifest.params = params_from_json(m.at("params"));
    for (const auto& [key, value] : m.at("scale").items()) {
      out.manifest.scale.factors[key] = value.get<double>();
    }
    out.manifest.eps = m.at("eps").get<double>();
  } catch (const json::exception& e) {
    throw IoError("malformed dataset manifest: " + std::string(e.what()));
  }

  out.scenes.reserve(static_cast<std::size_t>(out.manifest.count));
  for (int s = 0; s < out.manifest.count; ++s) {
    out.scenes.push_back(read_nndf(dir / scene_name(s)).field);
  }
  return out;
}

}  // namespace nnd
