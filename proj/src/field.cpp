#include "nnd/field.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace nnd {

using json = nlohmann::json;

double ScaleSpec::factor(const std::string& channel) const {
  const auto it = factors.find(channel);
  if (it == factors.end()) {
    throw ValidationError("ScaleSpec has no factor for channel '" + channel + "'");
  }
  return it->second;
}

bool ScaleSpec::covers(const std::vector<std::string>& channels) const {
  for (const auto& c : channels) {
    if (factors.find(c) == factors.end()) return false;
  }
  return true;
}

namespace {

constexpr char kMagic[8] = {'N', 'N', 'D', 'F', '0', '0', '0', '1'};

void put_u32le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_nndf(const std::filesystem::path& path, const Field& field,
                const ScaleSpec& scale, double eps) {
  if (!scale.covers(field.channels)) {
    throw ValidationError("write_nndf: scale does not cover all field channels");
  }
  json header;
  header["dims"] = {field.dims.nz, field.dims.ny, field.dims.nx};
  header["channels"] = field.channels;
  header["dtype"] = "f32le";
  header["order"] = "zyxc";
  json js = json::object();
  for (const auto& c : field.channels) js[c] = scale.factor(c);
  header["scale"] = js;
  header["eps"] = eps;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kMagic, 8);
  put_u32le(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  const Eigen::ArrayXf f32 = field.values.cast<float>();
  if (!f32.isFinite().all()) {
    throw ValidationError("write_nndf: values are non-finite or exceed the f32 storage range");
  }
  static_assert(sizeof(float) == 4);
  // Raster is written little-endian; this code targets little-endian hosts.
  os.write(reinterpret_cast<const char*>(f32.data()),
           static_cast<std::streamsize>(f32.size() * sizeof(float)));
  if (!os) throw IoError("short write: " + path.string());
}

NndfFile read_nndf(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not an NNDF v1 file: " + path.string());
  }
  const std::uint32_t hlen = get_u32le(is);
  std::string text(hlen, '\0');
  is.read(text.data(), hlen);
  if (!is) throw IoError("truncated NNDF header: " + path.string());

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("malformed NNDF header in " + path.string() + ": " + e.what());
  }

  NndfFile out;
  try {
    const auto dims = header.at("dims");
    out.header.dims = {dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>()};
    out.header.channels = header.at("channels").get<std::vector<std::string>>();
    if (header.at("dtype").get<std::string>() != "f32le" ||
        header.at("order").get<std::string>() != "zyxc") {
      throw IoError("unsupported NNDF dtype/order in " + path.string());
    }
    for (const auto& [key, value] : header.at("scale").items()) {
      out.header.scale.factors[key] = value.get<double>();
    }
    out.header.eps = header.at("eps").get<double>();
  } catch (const json::exception& e) {
    throw IoError("malformed NNDF header in " + path.string() + ": " + e.what());
  }

  if (out.header.dims.nz <= 0 || out.header.dims.ny <= 0 || out.header.dims.nx <= 0 ||
      out.header.channels.empty()) {
    throw IoError("invalid NNDF dims/channels in " + path.string());
  }

  out.field = Field(out.header.dims, out.header.channels);
  Eigen::ArrayXf f32(out.field.size());
  is.read(reinterpret_cast<char*>(f32.data()),
          static_cast<std::streamsize>(f32.size() * sizeof(float)));
  if (!is) throw IoError("truncated NNDF raster: " + path.string());
  out.field.values = f32.cast<double>();
  return out;
}

}  // namespace nnd
