#include "nnd/forward.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "nnd/rng.hpp"

namespace nnd {

using json = nlohmann::json;

void validate_nonnegative(const Field& x, const char* who) {
  if (!x.values.isFinite().all()) {
    throw ValidationError(std::string(who) + ": field contains non-finite values");
  }
  if ((x.values < 0.0).any()) {
    throw ValidationError(std::string(who) +
                          ": field contains negative values; forward models are undefined "
                          "for negative objects");
  }
}

namespace {

// Iterate rays along `axis`. A ray is identified by the two remaining
// coordinates; datum index is the raster order of the reduced grid with the
// channel minor. Calls fn(datum_index, voxel_index) for every voxel on
// every ray, in path order.
template <typename Fn>
void for_each_ray_voxel(const GridDims& d, int C, Axis axis, Fn&& fn) {
  const auto vox = [&](int z, int y, int x) {
    return (static_cast<std::int64_t>(z) * d.ny + y) * d.nx + x;
  };
  std::int64_t datum = 0;
  switch (axis) {
    case Axis::Z:
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          for (int c = 0; c < C; ++c, ++datum)
            for (int z = 0; z < d.nz; ++z) fn(datum, vox(z, y, x) * C + c);
      break;
    case Axis::Y:
      for (int z = 0; z < d.nz; ++z)
        for (int x = 0; x < d.nx; ++x)
          for (int c = 0; c < C; ++c, ++datum)
            for (int y = 0; y < d.ny; ++y) fn(datum, vox(z, y, x) * C + c);
      break;
    case Axis::X:
      for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
          for (int c = 0; c < C; ++c, ++datum)
            for (int x = 0; x < d.nx; ++x) fn(datum, vox(z, y, x) * C + c);
      break;
  }
}

std::int64_t ray_count(const GridDims& d, int C, Axis axis) {
  switch (axis) {
    case Axis::Z: return static_cast<std::int64_t>(d.ny) * d.nx * C;
    case Axis::Y: return static_cast<std::int64_t>(d.nz) * d.nx * C;
    default: return static_cast<std::int64_t>(d.nz) * d.ny * C;
  }
}

}  // namespace

// --- IdentityModel ----------------------------------------------------------

Eigen::ArrayXd IdentityModel::apply(const Field& x) const {
  validate_nonnegative(x, "identity forward model");
  return x.values;
}

Field IdentityModel::vjp(const Field& x, const Eigen::ArrayXd& cotangent) const {
  if (cotangent.size() != x.values.size()) {
    throw ValidationError("identity vjp: cotangent size mismatch");
  }
  Field g = x;
  g.values = cotangent;
  return g;
}

std::int64_t IdentityModel::data_size(const GridDims& dims, int channels) const {
  return dims.voxels() * channels;
}

// --- LinearProjectionModel --------------------------------------------------

LinearProjectionModel::LinearProjectionModel(Axis axis, Eigen::ArrayXd ray_weights)
    : axis_(axis), ray_weights_(std::move(ray_weights)) {}

Eigen::ArrayXd LinearProjectionModel::apply(const Field& x) const {
  validate_nonnegative(x, "linear projection forward model");
  const std::int64_t rays = ray_count(x.dims, x.channel_count(), axis_);
  if (ray_weights_.size() != 0 && ray_weights_.size() != rays) {
    throw ValidationError("linear projection: ray weight count mismatch");
  }
  Eigen::ArrayXd y = Eigen::ArrayXd::Zero(rays);
  for_each_ray_voxel(x.dims, x.channel_count(), axis_,
                     [&](std::int64_t k, std::int64_t v) { y[k] += x.values[v]; });
  if (ray_weights_.size() != 0) y *= ray_weights_;
  return y;
}

Field LinearProjectionModel::vjp(const Field& x, const Eigen::ArrayXd& cotangent) const {
  const std::int64_t rays = ray_count(x.dims, x.channel_count(), axis_);
  if (cotangent.size() != rays) {
    throw ValidationError("linear projection vjp: cotangent size mismatch");
  }
  Eigen::ArrayXd u = cotangent;
  if (ray_weights_.size() != 0) u *= ray_weights_;
  Field g = x;
  g.values.setZero();
  for_each_ray_voxel(x.dims, x.channel_count(), axis_,
                     [&](std::int64_t k, std::int64_t v) { g.values[v] += u[k]; });
  return g;
}

std::int64_t LinearProjectionModel::data_size(const GridDims& dims, int channels) const {
  return ray_count(dims, channels, axis_);
}

json LinearProjectionModel::params() const {
  json p;
  p["axis"] = axis_name(axis_);
  if (ray_weights_.size() != 0) {
    p["ray_weights"] = std::vector<double>(ray_weights_.begin(), ray_weights_.end());
  }
  return p;
}

// --- BeerLambertModel -------------------------------------------------------

BeerLambertModel::BeerLambertModel(Axis axis, double i0) : axis_(axis), i0_(i0) {
  if (!(i0 > 0.0)) throw ValidationError("beer_lambert: I0 must be positive");
}

Eigen::ArrayXd BeerLambertModel::apply(const Field& x) const {
  validate_nonnegative(x, "beer_lambert forward model");
  const std::int64_t rays = ray_count(x.dims, x.channel_count(), axis_);
  Eigen::ArrayXd path = Eigen::ArrayXd::Zero(rays);
  for_each_ray_voxel(x.dims, x.channel_count(), axis_,
                     [&](std::int64_t k, std::int64_t v) { path[k] += x.values[v]; });
  return i0_ * (-path).exp();
}

Field BeerLambertModel::vjp(const Field& x, const Eigen::ArrayXd& cotangent) const {
  const std::int64_t rays = ray_count(x.dims, x.channel_count(), axis_);
  if (cotangent.size() != rays) {
    throw ValidationError("beer_lambert vjp: cotangent size mismatch");
  }
  // dy_k/dx_v = -y_k for v on ray k
  const Eigen::ArrayXd y = apply(x);
  const Eigen::ArrayXd u = -cotangent * y;
  Field g = x;
  g.values.setZero();
  for_each_ray_voxel(x.dims, x.channel_count(), axis_,
                     [&](std::int64_t k, std::int64_t v) { g.values[v] += u[k]; });
  return g;
}

std::int64_t BeerLambertModel::data_size(const GridDims& dims, int channels) const {
  return ray_count(dims, channels, axis_);
}

json BeerLambertModel::params() const {
  return json{{"axis", axis_name(axis_)}, {"i0", i0_}};
}

std::unique_ptr<ForwardModel> make_forward_model(const std::string& id, const json& params) {
  if (id == "identity") return std::make_unique<IdentityModel>();
  if (id == "linear_projection") {
    const Axis axis = axis_from_name(params.value("axis", "z"));
    Eigen::ArrayXd w;
    if (params.contains("ray_weights")) {
      const auto vec = params.at("ray_weights").get<std::vector<double>>();
      w = Eigen::Map<const Eigen::ArrayXd>(vec.data(), static_cast<Eigen::Index>(vec.size()));
    }
    return std::make_unique<LinearProjectionModel>(axis, std::move(w));
  }
  if (id == "beer_lambert") {
    return std::make_unique<BeerLambertModel>(axis_from_name(params.value("axis", "z")),
                                              params.value("i0", 100.0));
  }
  throw ValidationError("unknown forward model id: '" + id + "'");
}

// --- noise + likelihood -----------------------------------------------------

Measurement add_photon_noise(const Eigen::ArrayXd& clean, std::uint64_t seed, double y_min,
                             NoiseKind kind) {
  if ((clean < 0.0).any()) {
    throw ValidationError("add_photon_noise: clean signal must be nonnegative");
  }
  if (!(y_min > 0.0)) throw ValidationError("add_photon_noise: y_min must be positive");
  Measurement m;
  m.seed = seed;
  m.y_min = y_min;
  m.values.resize(clean.size());
  rng::Stream stream(seed, rng::StreamKind::MeasureNoise, 0);
  if (kind == NoiseKind::Gaussian) {
    for (Eigen::Index k = 0; k < clean.size(); ++k) {
      m.values[k] = clean[k] + std::sqrt(clean[k]) * stream.normal();
    }
  } else {
    // inverse-CDF-free Poisson (Knuth for small mean, normal approx above)
    for (Eigen::Index k = 0; k < clean.size(); ++k) {
      const double lambda = clean[k];
      if (lambda > 64.0) {
        m.values[k] = std::round(lambda + std::sqrt(lambda) * stream.normal());
      } else {
        const double limit = std::exp(-lambda);
        double prod = stream.uniform();
        long count = 0;
        while (prod > limit) {
          prod *= stream.uniform();
          ++count;
        }
        m.values[k] = static_cast<double>(count);
      }
    }
  }
  m.values = m.values.max(y_min);
  return m;
}

double log_likelihood(const Measurement& y, const Field& x, const ForwardModel& fm) {
  if ((y.values <= 0.0).any()) {
    throw ValidationError("log_likelihood: measurement values must be strictly positive");
  }
  const Eigen::ArrayXd f = fm.apply(x);
  if (f.size() != y.values.size()) {
    throw ValidationError("log_likelihood: measurement/model size mismatch");
  }
  if (!f.isFinite().all()) {
    throw DivergenceError("log_likelihood: non-finite forward output");
  }
  const Eigen::ArrayXd r = y.values - f;
  return (-r.square() / (2.0 * y.values) - 0.5 * (2.0 * M_PI * y.values).log()).sum();
}

// --- measurement container ---------------------------------------------------

namespace {
constexpr char kMagicY[8] = {'N', 'N', 'D', 'Y', '0', '0', '0', '1'};
}

void write_measurement(const std::filesystem::path& path, const Measurement& m) {
  json header;
  header["fm"] = m.fm_id;
  header["params"] = m.fm_params;
  header["seed"] = m.seed;
  header["y_min"] = m.y_min;
  header["count"] = m.values.size();
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kMagicY, 8);
  const std::uint32_t hlen = static_cast<std::uint32_t>(text.size());
  const unsigned char b[4] = {static_cast<unsigned char>(hlen),
                              static_cast<unsigned char>(hlen >> 8),
                              static_cast<unsigned char>(hlen >> 16),
                              static_cast<unsigned char>(hlen >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.write(reinterpret_cast<const char*>(m.values.data()),
           static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!os) throw IoError("short write: " + path.string());
}

Measurement read_measurement(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagicY, 8) != 0) {
    throw IoError("not an NNDY v1 measurement file: " + path.string());
  }
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  const std::uint32_t hlen = static_cast<std::uint32_t>(b[0]) |
                             (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
  std::string text(hlen, '\0');
  is.read(text.data(), hlen);
  if (!is) throw IoError("truncated measurement header: " + path.string());

  Measurement m;
  try {
    const json header = json::parse(text);
    m.fm_id = header.at("fm").get<std::string>();
    m.fm_params = header.at("params");
    m.seed = header.at("seed").get<std::uint64_t>();
    m.y_min = header.at("y_min").get<double>();
    m.values.resize(header.at("count").get<Eigen::Index>());
  } catch (const json::exception& e) {
    throw IoError("malformed measurement header in " + path.string() + ": " + e.what());
  }
  is.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!is) throw IoError("truncated measurement values: " + path.string());
  return m;
}

void write_measurement_csv(const std::filesystem::path& path, const Measurement& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "index,value\n";
  os.precision(17);
  for (Eigen::Index k = 0; k < m.values.size(); ++k) {
    os << k << "," << m.values[k] << "\n";
  }
}

}  // namespace nnd
