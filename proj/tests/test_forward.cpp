#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nnd/forward.hpp"
#include "nnd/oracle.hpp"
#include "nnd/rng.hpp"

using namespace nnd;
namespace orc = nnd::oracle;

namespace {

Field random_field(GridDims dims, std::vector<std::string> channels, std::uint64_t seed,
                   double scale = 1.0) {
  Field f(dims, std::move(channels));
  rng::Stream stream(seed, rng::StreamKind::Generic, 0);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] = scale * stream.uniform();
  return f;
}

}  // namespace

TEST_CASE("identity model flattens the field") {
  Field x({2, 2, 2}, {"a"});
  x.values.setConstant(3.5);
  IdentityModel fm;
  const auto y = fm.apply(x);
  CHECK(y.size() == 8);
  CHECK((y == 3.5).all());
}

TEST_CASE("projection of a single voxel lights up exactly one ray") {
  Field x({3, 4, 5}, {"a"});
  x.at(1, 2, 3, 0) = 7.0;
  LinearProjectionModel fm(Axis::Z);
  const auto y = fm.apply(x);
  CHECK(y.size() == 4 * 5);
  CHECK(y.sum() == 7.0);
  CHECK(y[2 * 5 + 3] == 7.0);
}

TEST_CASE("projection with per-ray weights") {
  Field x({2, 1, 2}, {"a"});
  x.values.setConstant(1.0);
  Eigen::ArrayXd w(2);
  w << 2.0, 0.5;
  LinearProjectionModel fm(Axis::Z, w);
  const auto y = fm.apply(x);
  CHECK(y[0] == doctest::Approx(4.0));
  CHECK(y[1] == doctest::Approx(1.0));
}

TEST_CASE("beer-lambert attenuation values") {
  BeerLambertModel fm(Axis::Z, 100.0);
  Field x({2, 1, 2}, {"a"});
  // first ray: path sum 0;  second ray: path sum ln 2
  x.at(0, 0, 1, 0) = std::log(2.0) / 2.0;
  x.at(1, 0, 1, 0) = std::log(2.0) / 2.0;
  const auto y = fm.apply(x);
  CHECK(y[0] == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(50.0).epsilon(1e-14));
}

TEST_CASE("every forward model rejects negative fields") {
  Field x({2, 2, 2}, {"a"});
  x.values.setConstant(1.0);
  x.values[5] = -1e-12;
  CHECK_THROWS_AS(IdentityModel().apply(x), ValidationError);
  CHECK_THROWS_AS(LinearProjectionModel(Axis::Y).apply(x), ValidationError);
  CHECK_THROWS_AS(BeerLambertModel(Axis::X, 100.0).apply(x), ValidationError);
}

TEST_CASE("adjoint identity for the linear models") {
  const auto x = random_field({3, 4, 2}, {"a", "b"}, 55);
  rng::Stream stream(56, rng::StreamKind::Generic, 1);

  const auto check_adjoint = [&](const ForwardModel& fm) {
    const auto y = fm.apply(x);
    Eigen::ArrayXd u(y.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = stream.normal();
    Field xr = x;
    for (Eigen::Index i = 0; i < xr.values.size(); ++i) xr.values[i] = stream.uniform();
    const double lhs = (fm.apply(xr) * u).sum();
    const double rhs = (xr.values * fm.vjp(xr, u).values).sum();
    CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300) <= 1e-10);
  };

  check_adjoint(IdentityModel());
  check_adjoint(LinearProjectionModel(Axis::Z));
  check_adjoint(LinearProjectionModel(Axis::X));
  Eigen::ArrayXd w(LinearProjectionModel(Axis::Y).data_size(x.dims, x.channel_count()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = stream.uniform() + 0.5;
  check_adjoint(LinearProjectionModel(Axis::Y, w));
}

TEST_CASE("vjp consistency with finite differences for every model") {
  const GridDims dims{2, 3, 2};
  const auto x = random_field(dims, {"a"}, 77, 0.5);
  rng::Stream stream(78, rng::StreamKind::Generic, 0);

  const auto check_fd = [&](const ForwardModel& fm) {
    Eigen::ArrayXd u(fm.data_size(dims, 1));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = stream.normal();
    const Field g = fm.vjp(x, u);
    const auto f = [&](const Eigen::VectorXd& v) {
      Field xv = x;
      xv.values = v.array();
      return (fm.apply(xv) * u).sum();
    };
    const Eigen::VectorXd fd = orc::finite_diff_grad(f, x.values.matrix(), 1e-6);
    const double rel = ((g.values - fd.array()).abs() / fd.array().abs().max(1e-8)).maxCoeff();
    CHECK(rel <= 1e-6);
  };

  check_fd(IdentityModel());
  check_fd(LinearProjectionModel(Axis::Y));
  check_fd(BeerLambertModel(Axis::Z, 100.0));
}

TEST_CASE("photon noise: zero signal is floored at y_min") {
  Eigen::ArrayXd clean = Eigen::ArrayXd::Zero(4);
  const auto m = add_photon_noise(clean, 9, 1e-3);
  CHECK((m.values == 1e-3).all());
}

TEST_CASE("photon noise matches the variance-equals-mean law") {
  Eigen::ArrayXd clean = Eigen::ArrayXd::Constant(100000, 100.0);
  const auto m = add_photon_noise(clean, 12345);
  const double mean = m.values.mean();
  const double var = (m.values - mean).square().mean();
  CHECK(std::abs(mean - 100.0) <= 0.2);
  CHECK(std::abs(var - 100.0) <= 3.0);
}

TEST_CASE("photon noise is deterministic per seed") {
  Eigen::ArrayXd clean = Eigen::ArrayXd::Constant(64, 10.0);
  const auto a = add_photon_noise(clean, 7);
  const auto b = add_photon_noise(clean, 7);
  const auto c = add_photon_noise(clean, 8);
  CHECK((a.values == b.values).all());
  CHECK((a.values != c.values).any());
}

TEST_CASE("poisson synthesis option has the right mean") {
  Eigen::ArrayXd clean(2000);
  clean.setConstant(4.0);
  const auto m = add_photon_noise(clean, 3, 1e-3, NoiseKind::Poisson);
  CHECK(m.values.mean() == doctest::Approx(4.0).epsilon(0.05));
  // integer counts, except zero draws which are floored at y_min
  for (Eigen::Index i = 0; i < 100; ++i) {
    const bool integral = m.values[i] == std::floor(m.values[i]);
    const bool floored = m.values[i] == m.y_min;
    CHECK((integral || floored));
  }
}

TEST_CASE("log likelihood at the exact fit equals the normalizer term") {
  Field x({2, 2, 2}, {"a"});
  x.values.setConstant(2.0);
  IdentityModel fm;
  Measurement m;
  m.values = fm.apply(x);
  const double expect = -0.5 * (2.0 * M_PI * m.values).log().sum();
  CHECK(log_likelihood(m, x, fm) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("single-datum log likelihood value") {
  Field x({1, 1, 1}, {"a"});
  x.values.setConstant(2.0);
  Measurement m;
  m.values = Eigen::ArrayXd::Constant(1, 1.0);
  const double expect = -0.5 - 0.5 * std::log(2.0 * M_PI);
  CHECK(log_likelihood(m, x, IdentityModel()) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("log likelihood rejects non-positive measurements") {
  Field x({1, 1, 1}, {"a"});
  x.values.setConstant(1.0);
  Measurement m;
  m.values = Eigen::ArrayXd::Constant(1, 0.0);
  CHECK_THROWS_AS(log_likelihood(m, x, IdentityModel()), ValidationError);
}

TEST_CASE("log likelihood gradient matches finite differences (identity model)") {
  const GridDims dims{2, 2, 2};
  const auto x = random_field(dims, {"a"}, 91, 2.0);
  IdentityModel fm;
  const auto m = add_photon_noise(fm.apply(x), 17);

  // grad wrt x of sum_k -(y_k - x_k)^2/(2 y_k) is (y_k - x_k)/y_k
  const Eigen::ArrayXd grad = (m.values - x.values) / m.values;
  const auto f = [&](const Eigen::VectorXd& v) {
    Field xv = x;
    xv.values = v.array();
    return log_likelihood(m, xv, fm);
  };
  const Eigen::VectorXd fd = orc::finite_diff_grad(f, x.values.matrix(), 1e-6);
  const double rel = ((grad - fd.array()).abs() / fd.array().abs().max(1e-10)).maxCoeff();
  CHECK(rel <= 1e-6);
}

TEST_CASE("measurement file round trip") {
  Measurement m;
  m.values = Eigen::ArrayXd::LinSpaced(10, 0.5, 5.0);
  m.fm_id = "beer_lambert";
  m.fm_params = {{"axis", "z"}, {"i0", 100.0}};
  m.seed = 42;
  m.y_min = 1e-3;

  const auto dir = std::filesystem::temp_directory_path() / "nnd_test_forward";
  std::filesystem::create_directories(dir);
  write_measurement(dir / "m.nndy", m);
  const auto r = read_measurement(dir / "m.nndy");
  CHECK((r.values == m.values).all());
  CHECK(r.fm_id == m.fm_id);
  CHECK(r.fm_params == m.fm_params);
  CHECK(r.seed == m.seed);
  CHECK(r.y_min == m.y_min);

  write_measurement_csv(dir / "m.csv", m);
  CHECK(std::filesystem::file_size(dir / "m.csv") > 0);
}

TEST_CASE("forward model factory") {
  CHECK(make_forward_model("identity", {})->id() == "identity");
  CHECK(make_forward_model("linear_projection", {{"axis", "y"}})->id() == "linear_projection");
  CHECK(make_forward_model("beer_lambert", {{"axis", "z"}, {"i0", 50.0}})->id() ==
        "beer_lambert");
  CHECK_THROWS_AS(make_forward_model("warp_drive", {}), ValidationError);
}
