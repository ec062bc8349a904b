#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nnd/common.hpp"

namespace nnd {

namespace tag {
struct Physical {};  // nonnegative object domain
struct Latent {};    // real-valued log domain
}  // namespace tag

/// Dense multi-channel 3D voxel grid. Storage is a flat Eigen array in
/// z-major, channel-minor order: index ((z*ny + y)*nx + x)*C + c.
/// The tag distinguishes the physical domain from its log-latent image at
/// the type level; the layout is identical.
template <typename Scalar, typename Tag>
struct Grid {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  GridDims dims;
  std::vector<std::string> channels;
  Array values;

  Grid() = default;
  Grid(GridDims d, std::vector<std::string> ch)
      : dims(d), channels(std::move(ch)),
        values(Array::Zero(d.voxels() * static_cast<std::int64_t>(channels.size()))) {}

  int channel_count() const { return static_cast<int>(channels.size()); }
  std::int64_t size() const { return values.size(); }

  std::int64_t index(int z, int y, int x, int c) const {
    return ((static_cast<std::int64_t>(z) * dims.ny + y) * dims.nx + x) * channel_count() + c;
  }
  Scalar& at(int z, int y, int x, int c) { return values[index(z, y, x, c)]; }
  Scalar at(int z, int y, int x, int c) const { return values[index(z, y, x, c)]; }

  bool same_shape(const GridDims& d, const std::vector<std::string>& ch) const {
    return dims == d && channels == ch;
  }

  template <typename OtherTag>
  Grid<Scalar, OtherTag> retagged() const {
    Grid<Scalar, OtherTag> out;
    out.dims = dims;
    out.channels = channels;
    out.values = values;
    return out;
  }
};

using Field = Grid<double, tag::Physical>;
using LatentField = Grid<double, tag::Latent>;

/// Per-channel multiplicative factors. `forward` maps physical units to the
/// normalized range the model was trained on; `inverse` maps back.
struct ScaleSpec {
  std::map<std::string, double> factors;

  static ScaleSpec ones(const std::vector<std::string>& channels) {
    ScaleSpec s;
    for (const auto& c : channels) s.factors[c] = 1.0;
    return s;
  }
  double factor(const std::string& channel) const;
  bool covers(const std::vector<std::string>& channels) const;
  bool operator==(const ScaleSpec&) const = default;
};

// ---------------------------------------------------------------------------
// NNDF v1 container: 8-byte magic "NNDF0001", uint32le JSON header length,
// JSON header {dims, channels, dtype:"f32le", order:"zyxc", scale, eps},
// then the raw f32le raster. Round-trips bit-exactly.
// ---------------------------------------------------------------------------

struct NndfHeader {
  GridDims dims;
  std::vector<std::string> channels;
  ScaleSpec scale;
  double eps = 0.0;
};

void write_nndf(const std::filesystem::path& path, const Field& field,
                const ScaleSpec& scale, double eps);

struct NndfFile {
  Field field;
  NndfHeader header;
};

NndfFile read_nndf(const std::filesystem::path& path);

/// Quantize through the on-disk f32 representation. Dataset values pass
/// through this at generation time so in-memory statistics match what any
/// reader of the files would compute.
template <typename Scalar, typename Tag>
void quantize_f32(Grid<Scalar, Tag>& g) {
  g.values = g.values.template cast<float>().template cast<Scalar>();
}

}  // namespace nnd
