#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "nnd/field.hpp"
#include "nnd/forward.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kMixture =
    "denoiser={\"type\":\"mixture\",\"components\":[{\"weight\":0.7,\"mean\":-10,"
    "\"stddev\":0.25},{\"weight\":0.3,\"mean\":0,\"stddev\":0.8}]}";

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / "nnd_test_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
};

int run(const std::string& args) {
  const std::string cmd = std::string(NND_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli end-to-end: dataset, generate, reproduce, render, invert, trace") {
  Sandbox sb;
  const std::string d = sb.dir.string();

  // dataset
  REQUIRE(run("make-dataset --out " + d + "/ds --seed 5 --override dataset.count=12 "
              "--override dims=[8,8,8]") == 0);
  CHECK(fs::exists(sb.dir / "ds" / "manifest.json"));
  CHECK(fs::exists(sb.dir / "ds" / "scene_00011.nndf"));
  CHECK(fs::exists(sb.dir / "ds" / "config.resolved.json"));

  // generation is reproducible byte-for-byte under a fixed seed
  const std::string gen_args = std::string("--seed 7 --override dims=[8,8,8] --override '") +
                               kMixture + "'";
  REQUIRE(run("generate --out " + d + "/g1 " + gen_args) == 0);
  REQUIRE(run("generate --out " + d + "/g2 " + gen_args) == 0);
  CHECK(slurp(sb.dir / "g1" / "field.nndf") == slurp(sb.dir / "g2" / "field.nndf"));

  // and from the echoed config alone
  REQUIRE(run("generate --out " + d + "/g3 --config " + d + "/g1/config.resolved.json") == 0);
  CHECK(slurp(sb.dir / "g1" / "field.nndf") == slurp(sb.dir / "g3" / "field.nndf"));

  // generated field is strictly positive
  const auto field = nnd::read_nndf(sb.dir / "g1" / "field.nndf");
  CHECK(field.field.values.minCoeff() > 0.0);

  // render-mip produces one image + sidecar per channel
  REQUIRE(run("render-mip --out " + d + "/mip --override render.input=" + d +
              "/g1/field.nndf") == 0);
  for (const char* ch : {"lwc", "re", "ve"}) {
    CHECK(fs::exists(sb.dir / "mip" / (std::string(ch) + "_z.pgm")));
    CHECK(fs::exists(sb.dir / "mip" / (std::string(ch) + "_z.json")));
  }
  const std::string pgm = slurp(sb.dir / "mip" / "lwc_z.pgm");
  CHECK(pgm.substr(0, 3) == "P5\n");

  // inversion from a synthesized measurement
  REQUIRE(run("invert --out " + d + "/inv --seed 3 --override dims=[8,8,8] --override '" +
              std::string(kMixture) +
              "' --override 'measurement={\"synthesize\":{\"truth\":\"" + d +
              "/g1/field.nndf\",\"seed\":11,\"y_min\":0.001}}' "
              "--override sampler.likelihood_weight=0.05") == 0);
  CHECK(fs::exists(sb.dir / "inv" / "field.nndf"));
  CHECK(fs::exists(sb.dir / "inv" / "measurement.nndy"));
  CHECK(fs::exists(sb.dir / "inv" / "measurement.csv"));
  const auto meas = nnd::read_measurement(sb.dir / "inv" / "measurement.nndy");
  CHECK(meas.fm_id == "identity");
  CHECK(meas.seed == 11);

  // trace-plot selects columns
  REQUIRE(run("trace-plot --out " + d + "/tp --override trace_plot.input=" + d +
              "/g1/trace.csv --override 'trace_plot.columns=[\"t\",\"sigma\",\"rho_mean\"]'") ==
          0);
  std::ifstream tp(sb.dir / "tp" / "trace_plot.csv");
  std::string header;
  std::getline(tp, header);
  CHECK(header == "t,sigma,rho_mean");
  int rows = 0;
  std::string line;
  while (std::getline(tp, line)) ++rows;
  CHECK(rows == 600);
}

TEST_CASE("cli: train on a tiny corpus and sample from the model") {
  Sandbox sb;
  const std::string d = sb.dir.string();
  REQUIRE(run("make-dataset --out " + d + "/ds --seed 5 --override dataset.count=8 "
              "--override dims=[8,8,8]") == 0);
  REQUIRE(run("train --out " + d + "/tr --seed 2 --override train.dataset_dir=" + d +
              "/ds --override train.steps=3 --override train.batch=2 --override train.L=10") ==
          0);
  CHECK(fs::exists(sb.dir / "tr" / "model.nndm"));
  CHECK(fs::exists(sb.dir / "tr" / "loss_trace.csv"));

  REQUIRE(run("generate --out " + d + "/gm --seed 9 --override dims=[8,8,8] --override "
              "'denoiser={\"type\":\"model\",\"path\":\"" + d + "/tr/model.nndm\"}' "
              "--override schedule.T=50") == 0);
  const auto field = nnd::read_nndf(sb.dir / "gm" / "field.nndf");
  CHECK(field.field.values.minCoeff() > 0.0);
}

TEST_CASE("cli: oracle-check passes") {
  CHECK(run("oracle-check") == 0);
}

TEST_CASE("cli exit codes: 2 for validation, 3 for divergence") {
  Sandbox sb;
  const std::string d = sb.dir.string();
  CHECK(run("generate --out " + d + "/b1 --override 'denoiser={\"type\":\"warp\"}'") == 2);
  CHECK(run("render-mip --out " + d + "/b2 --override render.input=missing.nndf") == 2);
  CHECK(run("generate --out " + d + "/b3 --seed 4 --override dims=[4,4,4] "
            "--override schedule.zeta=1.0") == 3);
  // mismatched eps against a model is a hard error
  REQUIRE(run("make-dataset --out " + d + "/ds --seed 5 --override dataset.count=4 "
              "--override dims=[8,8,8]") == 0);
  REQUIRE(run("train --out " + d + "/tr --seed 2 --override train.dataset_dir=" + d +
              "/ds --override train.steps=1 --override train.batch=2 --override train.L=10") ==
          0);
  CHECK(run("generate --out " + d + "/b4 --override dims=[8,8,8] --override "
            "'denoiser={\"type\":\"model\",\"path\":\"" + d + "/tr/model.nndm\"}' "
            "--override eps=0.5") == 2);
}
