#include "nnd/mip.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace nnd {

Eigen::MatrixXd mip(const Field& field, int channel, Axis axis) {
  if (channel < 0 || channel >= field.channel_count()) {
    throw ValidationError("mip: channel index out of range");
  }
  const auto& d = field.dims;
  int rows = 0, cols = 0;
  switch (axis) {
    case Axis::Z: rows = d.ny; cols = d.nx; break;
    case Axis::Y: rows = d.nz; cols = d.nx; break;
    case Axis::X: rows = d.nz; cols = d.ny; break;
  }
  Eigen::MatrixXd img = Eigen::MatrixXd::Constant(rows, cols,
                                                  -std::numeric_limits<double>::infinity());
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const double v = field.at(z, y, x, channel);
        switch (axis) {
          case Axis::Z: img(y, x) = std::max(img(y, x), v); break;
          case Axis::Y: img(z, x) = std::max(img(z, x), v); break;
          case Axis::X: img(z, y) = std::max(img(z, y), v); break;
        }
      }
    }
  }
  return img;
}

void write_pgm16(const std::filesystem::path& path, const Eigen::MatrixXd& image,
                 double max_value, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("write_pgm16: gamma must be positive");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "P5\n" << image.cols() << " " << image.rows() << "\n65535\n";
  const double inv_gamma = 1.0 / gamma;
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      double u = max_value > 0.0 ? image(r, c) / max_value : 0.0;
      u = std::clamp(u, 0.0, 1.0);
      const auto pixel = static_cast<std::uint16_t>(std::lround(65535.0 * std::pow(u, inv_gamma)));
      // P5 with maxval > 255 stores the most significant byte first
      const unsigned char bytes[2] = {static_cast<unsigned char>(pixel >> 8),
                                      static_cast<unsigned char>(pixel & 0xff)};
      os.write(reinterpret_cast<const char*>(bytes), 2);
    }
  }
  if (!os) throw IoError("short write: " + path.string());
}

MipOutput render_mip_channel(const Field& field, int channel, Axis axis, double gamma,
                             const std::filesystem::path& dir, const std::string& stem) {
  const Eigen::MatrixXd img = mip(field, channel, axis);
  const double max_value = img.maxCoeff();

  MipOutput out;
  out.pgm = dir / (stem + ".pgm");
  out.sidecar = dir / (stem + ".json");
  out.max_value = max_value;
  write_pgm16(out.pgm, img, max_value, gamma);

  nlohmann::json side;
  side["channel"] = field.channels[static_cast<std::size_t>(channel)];
  side["axis"] = axis_name(axis);
  side["max"] = max_value;
  side["gamma"] = gamma;
  side["rows"] = img.rows();
  side["cols"] = img.cols();
  side["maxval"] = 65535;
  std::ofstream os(out.sidecar);
  if (!os) throw IoError("cannot open for writing: " + out.sidecar.string());
  os << side.dump(2) << "\n";
  return out;
}

}  // namespace nnd
