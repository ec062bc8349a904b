#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nnd/latent.hpp"
#include "nnd/rng.hpp"

using namespace nnd;

namespace {

Field make_field(GridDims dims, std::vector<std::string> channels, double value) {
  Field f(dims, std::move(channels));
  f.values.setConstant(value);
  return f;
}

}  // namespace

TEST_CASE("to_latent of an all-zero field is log(eps) everywhere") {
  const double eps = std::exp(-10.0);
  const auto x = make_field({4, 3, 2}, {"a"}, 0.0);
  const auto rho = to_latent(x, eps);
  for (Eigen::Index i = 0; i < rho.values.size(); ++i) {
    CHECK(rho.values[i] == doctest::Approx(-10.0).epsilon(1e-15));
  }
}

TEST_CASE("default eps value") {
  CHECK(default_eps() == doctest::Approx(4.5399929762484852e-05).epsilon(1e-15));
  CHECK(default_eps() == std::exp(-10.0));
}

TEST_CASE("to_latent hits zero at x = 1 - eps") {
  const double eps = std::exp(-10.0);
  const auto x = make_field({1, 1, 1}, {"a"}, 1.0 - eps);
  const auto rho = to_latent(x, eps);
  CHECK(rho.values[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("to_latent rejects corrupt input") {
  auto x = make_field({2, 2, 2}, {"a"}, 1.0);
  x.values[3] = -1e-9;
  CHECK_THROWS_AS(to_latent(x, default_eps()), ValidationError);
  x.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(to_latent(x, default_eps()), ValidationError);
  x.values[3] = 1.0;
  CHECK_THROWS_AS(to_latent(x, 0.0), ValidationError);
}

TEST_CASE("from_latent basics") {
  LatentField rho({1, 1, 2}, {"a"});
  rho.values << 0.0, -10.0;
  const auto x = from_latent(rho);
  CHECK(x.values[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x.values[1] == doctest::Approx(4.5399929762484852e-05).epsilon(1e-15));

  rho.values[0] = 1e4;  // exp overflows
  CHECK_THROWS_AS(from_latent(rho), DivergenceError);
}

TEST_CASE("round trip: from_latent(to_latent(x)) = x + eps within 8 ulp") {
  const double eps = std::exp(-10.0);
  for (const double xv : {0.0, 1e-3, 1.0, 1e3}) {
    const auto x = make_field({1, 1, 1}, {"a"}, xv);
    const auto back = from_latent(to_latent(x, eps));
    const double expected = xv + eps;
    const double tol = 8.0 * std::abs(std::nexttoward(expected, INFINITY) - expected);
    CHECK(std::abs(back.values[0] - expected) <= tol);
  }
}

TEST_CASE("nonnegativity by construction: 1000 random latents in [-50, 5]") {
  rng::Stream stream(2024, rng::StreamKind::Generic, 0);
  LatentField rho({5, 5, 5}, {"a"});
  int negatives = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    for (Eigen::Index i = 0; i < rho.values.size(); ++i) {
      rho.values[i] = -50.0 + 55.0 * stream.uniform();
    }
    const auto x = from_latent(rho);
    if (x.values.minCoeff() <= 0.0) ++negatives;
  }
  CHECK(negatives == 0);
}

TEST_CASE("to_latent is strictly increasing per element") {
  const double eps = default_eps();
  double prev = -std::numeric_limits<double>::infinity();
  for (const double xv : {0.0, 1e-8, 1e-4, 1e-2, 0.5, 1.0, 7.0, 1e3}) {
    const auto rho = to_latent(make_field({1, 1, 1}, {"a"}, xv), eps);
    CHECK(rho.values[0] > prev);
    prev = rho.values[0];
  }
}

TEST_CASE("apply_scale: all-ones is the identity") {
  auto x = make_field({2, 3, 4}, {"a", "b"}, 0.0);
  rng::Stream stream(7, rng::StreamKind::Generic, 1);
  for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values[i] = stream.uniform();
  const auto y = apply_scale(x, ScaleSpec::ones(x.channels), ScaleDirection::Forward);
  CHECK((y.values == x.values).all());
}

TEST_CASE("apply_scale: forward then inverse is the identity to 1e-12") {
  auto x = make_field({3, 3, 3}, {"a", "b", "c"}, 0.0);
  rng::Stream stream(8, rng::StreamKind::Generic, 2);
  for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values[i] = 10.0 * stream.uniform();
  ScaleSpec s;
  s.factors = {{"a", 3.25}, {"b", 1e-4}, {"c", 117.0}};
  const auto back =
      apply_scale(apply_scale(x, s, ScaleDirection::Forward), s, ScaleDirection::Inverse);
  const double max_rel =
      ((back.values - x.values).abs() / x.values.abs().max(1e-300)).maxCoeff();
  CHECK(max_rel <= 1e-12);
}

TEST_CASE("apply_scale scales each channel independently") {
  auto x = make_field({1, 1, 2}, {"a", "b"}, 1.0);
  ScaleSpec s;
  s.factors = {{"a", 2.0}, {"b", 5.0}};
  const auto y = apply_scale(x, s, ScaleDirection::Forward);
  CHECK(y.at(0, 0, 0, 0) == 2.0);
  CHECK(y.at(0, 0, 0, 1) == 5.0);
  CHECK(y.at(0, 0, 1, 0) == 2.0);
  CHECK(y.at(0, 0, 1, 1) == 5.0);
}

TEST_CASE("apply_scale rejects unknown channels") {
  const auto x = make_field({1, 1, 1}, {"a"}, 1.0);
  ScaleSpec s;
  s.factors = {{"b", 2.0}};
  CHECK_THROWS_AS(apply_scale(x, s, ScaleDirection::Forward), ValidationError);
}

TEST_CASE("scale_from_percentile maps the 95th percentile to 1") {
  // single channel, values 1..100; nearest-rank p95 is 95
  Field f({1, 10, 10}, {"a"});
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<double>(i + 1);
  const auto spec = scale_from_percentile({f});
  CHECK(spec.factor("a") == doctest::Approx(1.0 / 95.0).epsilon(1e-12));

  const auto scaled = apply_scale(f, spec, ScaleDirection::Forward);
  // count of values that map above 1.0 should be exactly 5
  CHECK((scaled.values > 1.0).count() == 5);
}

TEST_CASE("scale_from_percentile falls back to 1 for all-zero channels") {
  const auto f = make_field({2, 2, 2}, {"z"}, 0.0);
  const auto spec = scale_from_percentile({f});
  CHECK(spec.factor("z") == 1.0);
}

TEST_CASE("NNDF round trip is bit-exact") {
  auto x = make_field({3, 4, 5}, {"lwc", "re"}, 0.0);
  rng::Stream stream(11, rng::StreamKind::Generic, 5);
  for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values[i] = 100.0 * stream.uniform();
  quantize_f32(x);
  ScaleSpec s;
  s.factors = {{"lwc", 0.5}, {"re", 2.0}};

  const auto dir = std::filesystem::temp_directory_path() / "nnd_test_latent";
  std::filesystem::create_directories(dir);
  const auto p1 = dir / "a.nndf";
  const auto p2 = dir / "b.nndf";
  write_nndf(p1, x, s, default_eps());

  const auto loaded = read_nndf(p1);
  CHECK(loaded.field.dims == x.dims);
  CHECK(loaded.field.channels == x.channels);
  CHECK((loaded.field.values == x.values).all());
  CHECK(loaded.header.scale == s);
  CHECK(loaded.header.eps == default_eps());

  write_nndf(p2, loaded.field, loaded.header.scale, loaded.header.eps);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(b1.substr(0, 8) == "NNDF0001");
}

TEST_CASE("read_nndf rejects malformed input") {
  const auto dir = std::filesystem::temp_directory_path() / "nnd_test_latent";
  std::filesystem::create_directories(dir);
  const auto p = dir / "bad.nndf";
  std::ofstream(p, std::ios::binary) << "not a field file";
  CHECK_THROWS_AS(read_nndf(p), IoError);
}
