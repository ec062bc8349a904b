#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "nnd/mip.hpp"

using namespace nnd;

namespace {

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("mip of a single bright voxel") {
  Field f({4, 5, 6}, {"a"});
  f.at(2, 3, 4, 0) = 7.5;
  const auto img = mip(f, 0, Axis::Z);
  CHECK(img.rows() == 5);
  CHECK(img.cols() == 6);
  CHECK(img(3, 4) == 7.5);
  CHECK(img.sum() == 7.5);

  const auto img_y = mip(f, 0, Axis::Y);
  CHECK(img_y.rows() == 4);
  CHECK(img_y.cols() == 6);
  CHECK(img_y(2, 4) == 7.5);

  const auto img_x = mip(f, 0, Axis::X);
  CHECK(img_x.rows() == 4);
  CHECK(img_x.cols() == 5);
  CHECK(img_x(2, 3) == 7.5);
}

TEST_CASE("mip reduces along the axis with max") {
  Field f({2, 1, 1}, {"a"});
  f.at(0, 0, 0, 0) = 1.0;
  f.at(1, 0, 0, 0) = 3.0;
  CHECK(mip(f, 0, Axis::Z)(0, 0) == 3.0);
}

TEST_CASE("mip selects the requested channel and validates the index") {
  Field f({1, 1, 1}, {"a", "b"});
  f.at(0, 0, 0, 0) = 1.0;
  f.at(0, 0, 0, 1) = 2.0;
  CHECK(mip(f, 1, Axis::Z)(0, 0) == 2.0);
  CHECK_THROWS_AS(mip(f, 2, Axis::Z), ValidationError);
}

TEST_CASE("pgm16 writes the documented binary format") {
  Eigen::MatrixXd img(1, 2);
  img << 0.0, 10.0;
  const auto dir = std::filesystem::temp_directory_path() / "nnd_test_mip";
  std::filesystem::create_directories(dir);
  const auto path = dir / "img.pgm";
  write_pgm16(path, img, 10.0, 1.0);

  const std::string bytes = read_bytes(path);
  const std::string header = "P5\n2 1\n65535\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(bytes.substr(0, header.size()) == header);
  // first pixel 0 -> 0x0000; second pixel 10/10 -> 0xffff, big-endian
  CHECK(static_cast<unsigned char>(bytes[header.size() + 0]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 0xff);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == 0xff);
}

TEST_CASE("gamma correction lifts midtones") {
  Eigen::MatrixXd img(1, 1);
  img << 2.5;
  const auto dir = std::filesystem::temp_directory_path() / "nnd_test_mip";
  std::filesystem::create_directories(dir);
  write_pgm16(dir / "lin.pgm", img, 10.0, 1.0);
  write_pgm16(dir / "gam.pgm", img, 10.0, 2.0);
  const auto lin = read_bytes(dir / "lin.pgm");
  const auto gam = read_bytes(dir / "gam.pgm");
  const auto pixel = [](const std::string& b) {
    const std::size_t off = b.size() - 2;
    return (static_cast<unsigned>(static_cast<unsigned char>(b[off])) << 8) |
           static_cast<unsigned>(static_cast<unsigned char>(b[off + 1]));
  };
  CHECK(pixel(lin) == 16384);  // 0.25 * 65535 rounded
  CHECK(pixel(gam) == 32768);  // sqrt(0.25) * 65535 rounded
}

TEST_CASE("render_mip_channel records the normalization in the sidecar") {
  Field f({4, 5, 6}, {"lwc"});
  f.at(2, 3, 4, 0) = 7.5;
  const auto dir = std::filesystem::temp_directory_path() / "nnd_test_mip_render";
  std::filesystem::create_directories(dir);
  const auto out = render_mip_channel(f, 0, Axis::Z, 1.0, dir, "lwc_z");
  CHECK(out.max_value == 7.5);

  const auto side = nlohmann::json::parse(read_bytes(out.sidecar));
  CHECK(side.at("max").get<double>() == 7.5);
  CHECK(side.at("channel").get<std::string>() == "lwc");
  CHECK(side.at("axis").get<std::string>() == "z");
  CHECK(side.at("rows").get<int>() == 5);
  CHECK(side.at("cols").get<int>() == 6);

  // exactly one bright pixel in the image payload
  const std::string bytes = read_bytes(out.pgm);
  int bright = 0;
  const std::string header = "P5\n6 5\n65535\n";
  for (std::size_t i = header.size(); i + 1 < bytes.size(); i += 2) {
    const unsigned v = (static_cast<unsigned>(static_cast<unsigned char>(bytes[i])) << 8) |
                       static_cast<unsigned>(static_cast<unsigned char>(bytes[i + 1]));
    if (v == 65535) ++bright;
  }
  CHECK(bright == 1);
}
