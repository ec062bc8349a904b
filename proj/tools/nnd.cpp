// Command-line front end: dataset synthesis, denoiser training, generation,
// inversion, oracle verification and figure-style exports. One JSON config
// drives each subcommand; flags and --override key=value pairs refine it, and
// every run echoes its fully resolved configuration next to the outputs so it
// can be reproduced bit-for-bit.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nnd/denoise.hpp"
#include "nnd/forward.hpp"
#include "nnd/latent.hpp"
#include "nnd/mip.hpp"
#include "nnd/neural.hpp"
#include "nnd/oracle.hpp"
#include "nnd/parallel.hpp"
#include "nnd/rng.hpp"
#include "nnd/sampler.hpp"
#include "nnd/schedule.hpp"
#include "nnd/score.hpp"
#include "nnd/synthdata.hpp"
#include "nnd/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nnd;

namespace {

json default_config() {
  json cfg;
  cfg["seed"] = 0;
  cfg["eps"] = default_eps();
  cfg["dims"] = {16, 16, 16};
  cfg["channels"] = {"lwc", "re", "ve"};
  cfg["dataset"] = {{"count", 1000},
                    {"params",
                     {{"max_blobs", 3},
                      {"radius_lo", 1.2},
                      {"radius_hi", 2.8},
                      {"support_radius", 3.0},
                      {"amplitude_log_std", 0.5},
                      {"channel_peak", {0.3, 12.0, 150.0}},
                      {"height_gain", 0.7}}}};
  cfg["schedule"] = {{"T", 600}, {"K", 5}, {"sigma_1", 1e-2}, {"sigma_T", 1e2}, {"zeta", 2e-6}};
  cfg["train"] = {{"L", 150},          {"sigma_lo", 1e-2},
                  {"sigma_hi", 1e2},   {"batch", 32},
                  {"lr", 1e-4},        {"weight_decay", 1e-5},
                  {"steps", 5000},     {"validation_scenes", 0},
                  {"validation_every", 100}, {"stop_at_validation_ratio", 0.0},
                  {"dataset_dir", ""}};
  cfg["denoiser"] = {{"type", "gaussian"}, {"mean", 0.0}, {"stddev", 1.0}};
  cfg["sampler"] = {{"init", "latent-eps-centered"},
                    {"likelihood_weight", 1.0},
                    {"divergence_bound", 1e3},
                    {"snapshot_every", 0},
                    {"count", 1}};
  cfg["fm"] = {{"id", "identity"}, {"params", json::object()}};
  cfg["measurement"] = json::object();
  cfg["render"] = {{"input", ""}, {"axis", "z"}, {"gamma", 1.0}};
  cfg["trace_plot"] = {{"input", ""}, {"columns", json::array()}};
  return cfg;
}

void merge_into(json& base, const json& patch) {
  if (!patch.is_object()) {
    base = patch;
    return;
  }
  if (!base.is_object()) base = json::object();
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key)) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

void apply_override(json& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ValidationError("--override expects key=value, got '" + spec + "'");
  }
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings are taken literally
  }
  json* node = &cfg;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot - pos);
    if (key.empty()) throw ValidationError("--override has an empty path segment: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

struct Cli {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  json resolve() const {
    json cfg = default_config();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw IoError("cannot open config: " + config_path);
      json file_cfg;
      try {
        is >> file_cfg;
      } catch (const json::exception& e) {
        throw ValidationError("malformed config JSON: " + std::string(e.what()));
      }
      merge_into(cfg, file_cfg);
    }
    if (seed) cfg["seed"] = *seed;
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
  }
};

void add_common(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "JSON run configuration");
  cmd->add_option("--out", cli.out_dir, "output directory");
  cmd->add_option("--seed", cli.seed, "top-level seed (overrides the config)");
  cmd->add_option("--override", cli.overrides,
                  "dot-path config override, e.g. schedule.T=300 (repeatable)");
}

fs::path prepare_out(const Cli& cli, const json& cfg) {
  const fs::path out(cli.out_dir);
  fs::create_directories(out);
  std::ofstream os(out / "config.resolved.json");
  if (!os) throw IoError("cannot write resolved config in " + out.string());
  os << cfg.dump(2) << "\n";
  return out;
}

GridDims dims_of(const json& cfg) {
  const auto& d = cfg.at("dims");
  return {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
}

BlobParams blob_params_of(const json& p) {
  BlobParams out;
  out.max_blobs = p.at("max_blobs").get<int>();
  out.radius_lo = p.at("radius_lo").get<double>();
  out.radius_hi = p.at("radius_hi").get<double>();
  out.support_radius = p.at("support_radius").get<double>();
  out.amplitude_log_std = p.at("amplitude_log_std").get<double>();
  out.channel_peak = p.at("channel_peak").get<std::vector<double>>();
  out.height_gain = p.at("height_gain").get<double>();
  return out;
}

AnnealSchedule schedule_of(const json& cfg) {
  const auto& s = cfg.at("schedule");
  return anneal_schedule(s.at("T").get<int>(), s.at("K").get<int>(),
                         s.at("sigma_1").get<double>(), s.at("sigma_T").get<double>(),
                         s.at("zeta").get<double>());
}

ScaleSpec scale_of(const json& node) {
  ScaleSpec s;
  for (const auto& [key, value] : node.items()) s.factors[key] = value.get<double>();
  return s;
}

json scale_to_json(const ScaleSpec& s) {
  json out = json::object();
  for (const auto& [key, value] : s.factors) out[key] = value;
  return out;
}

struct LoadedDenoiser {
  std::unique_ptr<Denoiser> denoiser;
  std::optional<NeuralDenoiser::Metadata> model_meta;
};

LoadedDenoiser load_denoiser(const json& cfg) {
  const auto& d = cfg.at("denoiser");
  const std::string type = d.at("type").get<std::string>();
  LoadedDenoiser out;
  if (type == "gaussian") {
    out.denoiser = std::make_unique<GaussianDenoiser>(
        GaussianPrior{d.at("mean").get<double>(), d.at("stddev").get<double>()});
  } else if (type == "mixture") {
    MixturePrior prior;
    for (const auto& c : d.at("components")) {
      prior.components.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(),
                                  c.at("stddev").get<double>()});
    }
    out.denoiser = std::make_unique<MixtureDenoiser>(prior);
  } else if (type == "identity") {
    out.denoiser = std::make_unique<IdentityDenoiser>();
  } else if (type == "model") {
    auto net = NeuralDenoiser::load(d.at("path").get<std::string>());
    out.model_meta = net.metadata();
    out.denoiser = std::make_unique<NeuralDenoiser>(std::move(net));
  } else {
    throw ValidationError("unknown denoiser type: '" + type + "'");
  }
  return out;
}

RunConfig run_config_of(const json& cfg, const LoadedDenoiser& den) {
  RunConfig rc;
  rc.schedule = schedule_of(cfg);
  rc.eps = cfg.at("eps").get<double>();
  rc.seed = cfg.at("seed").get<std::uint64_t>();
  rc.dims = dims_of(cfg);
  rc.channels = cfg.at("channels").get<std::vector<std::string>>();
  const auto& s = cfg.at("sampler");
  rc.init = init_mode_from_name(s.at("init").get<std::string>());
  rc.likelihood_weight = s.at("likelihood_weight").get<double>();
  rc.divergence_bound = s.at("divergence_bound").get<double>();
  rc.snapshot_every = s.at("snapshot_every").get<int>();
  if (cfg.contains("scale")) rc.scale = scale_of(cfg.at("scale"));

  if (den.model_meta) {
    // a model pins eps, channels and scale; any conflicting request is an error
    const auto& meta = *den.model_meta;
    if (std::abs(meta.eps - rc.eps) > 1e-15 * std::max(meta.eps, rc.eps)) {
      throw ValidationError("eps mismatch between model metadata and run config");
    }
    if (meta.channels != rc.channels) {
      throw ValidationError("channel mismatch between model metadata and run config");
    }
    if (!rc.scale.factors.empty() && !(rc.scale == meta.scale)) {
      throw ValidationError("scale mismatch between model metadata and run config");
    }
    rc.scale = meta.scale;
  }
  return rc;
}

// --- subcommands -------------------------------------------------------------

int cmd_make_dataset(const Cli& cli) {
  const json cfg = cli.resolve();
  const auto dims = dims_of(cfg);
  const auto channels = cfg.at("channels").get<std::vector<std::string>>();
  const auto params = blob_params_of(cfg.at("dataset").at("params"));
  const int count = cfg.at("dataset").at("count").get<int>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();

  const auto scenes = make_blob_dataset(count, dims, channels, seed, params);

  DatasetManifest manifest;
  manifest.count = count;
  manifest.dims = dims;
  manifest.channels = channels;
  manifest.seed = seed;
  manifest.params = params;
  manifest.eps = cfg.at("eps").get<double>();
  manifest.scale = scenes.empty() ? ScaleSpec::ones(channels) : scale_from_percentile(scenes);

  const auto out = prepare_out(cli, cfg);
  write_dataset(out, scenes, manifest);
  std::cout << "wrote " << count << " scenes to " << out.string() << "\n";
  return 0;
}

int cmd_train(const Cli& cli) {
  const json cfg = cli.resolve();
  const auto& tr = cfg.at("train");
  const std::string dataset_dir = tr.at("dataset_dir").get<std::string>();
  if (dataset_dir.empty()) throw ValidationError("train.dataset_dir is required");
  const auto dataset = read_dataset(dataset_dir);
  if (dataset.scenes.empty()) throw ValidationError("train: dataset is empty");

  NeuralDenoiser::Metadata meta;
  meta.channels = dataset.manifest.channels;
  meta.eps = dataset.manifest.eps;
  meta.scale = dataset.manifest.scale;
  meta.sigma_levels = tr.at("L").get<int>();
  meta.sigma_lo = tr.at("sigma_lo").get<double>();
  meta.sigma_hi = tr.at("sigma_hi").get<double>();
  NeuralDenoiser net(meta);
  net.init_params(cfg.at("seed").get<std::uint64_t>());

  TrainOptions opts;
  opts.batch = tr.at("batch").get<int>();
  opts.lr = tr.at("lr").get<double>();
  opts.weight_decay = tr.at("weight_decay").get<double>();
  opts.steps = tr.at("steps").get<int>();
  opts.seed = cfg.at("seed").get<std::uint64_t>();
  opts.validation_scenes = tr.at("validation_scenes").get<int>();
  opts.validation_every = tr.at("validation_every").get<int>();
  opts.stop_at_validation_ratio = tr.at("stop_at_validation_ratio").get<double>();

  const auto sigmas = train_sigmas(meta.sigma_levels, meta.sigma_lo, meta.sigma_hi);
  const auto result = train(net, dataset.scenes, sigmas, opts);

  const auto out = prepare_out(cli, cfg);
  net.save(out / "model.nndm");
  {
    std::ofstream os(out / "loss_trace.csv");
    os << "step,loss\n";
    os.precision(17);
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
      os << i + 1 << "," << result.loss_trace[i] << "\n";
    }
  }
  if (!result.validation.empty()) {
    std::ofstream os(out / "validation.csv");
    os << "step,loss,identity_loss\n";
    os.precision(17);
    for (const auto& v : result.validation) {
      os << v.step << "," << v.loss << "," << v.identity_loss << "\n";
    }
  }
  std::cout << "trained " << result.steps_run << " steps; model at "
            << (out / "model.nndm").string() << "\n";
  return 0;
}

int cmd_generate(const Cli& cli) {
  const json cfg = cli.resolve();
  const auto den = load_denoiser(cfg);
  RunConfig rc = run_config_of(cfg, den);
  const int count = cfg.at("sampler").at("count").get<int>();
  if (count < 1) throw ValidationError("sampler.count must be >= 1");

  const auto out = prepare_out(cli, cfg);
  const auto base_seed = rc.seed;

  std::vector<std::string> errors(static_cast<std::size_t>(count));
  parallel_for(count, [&](std::int64_t i) {
    try {
      RunConfig run = rc;
      run.seed = base_seed + static_cast<std::uint64_t>(i);
      const auto result = generate(run, *den.denoiser);
      const fs::path dir = count == 1 ? out : out / ("run_" + std::to_string(i));
      fs::create_directories(dir);
      write_nndf(dir / "field.nndf", result.field, run.resolved_scale(), run.resolved_eps());
      result.trace.write_csv(dir / "trace.csv");
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw DivergenceError(e);
  }
  std::cout << "generated " << count << (count == 1 ? " field in " : " fields in ")
            << out.string() << "\n";
  return 0;
}

Measurement obtain_measurement(const json& cfg, const fs::path& out) {
  const auto& m = cfg.at("measurement");
  if (m.contains("path")) {
    return read_measurement(m.at("path").get<std::string>());
  }
  if (m.contains("synthesize")) {
    const auto& syn = m.at("synthesize");
    const auto truth = read_nndf(syn.at("truth").get<std::string>());
    const auto fm = make_forward_model(cfg.at("fm").at("id").get<std::string>(),
                                       cfg.at("fm").at("params"));
    const auto clean = fm->apply(truth.field);
    auto meas = add_photon_noise(clean, syn.at("seed").get<std::uint64_t>(),
                                 syn.value("y_min", 1e-3));
    meas.fm_id = fm->id();
    meas.fm_params = fm->params();
    write_measurement(out / "measurement.nndy", meas);
    write_measurement_csv(out / "measurement.csv", meas);
    return meas;
  }
  throw ValidationError("invert needs measurement.path or measurement.synthesize");
}

int cmd_invert(const Cli& cli) {
  const json cfg = cli.resolve();
  const auto den = load_denoiser(cfg);
  const RunConfig rc = run_config_of(cfg, den);
  const auto fm = make_forward_model(cfg.at("fm").at("id").get<std::string>(),
                                     cfg.at("fm").at("params"));

  const auto out = prepare_out(cli, cfg);
  const auto y = obtain_measurement(cfg, out);

  const auto result = invert(rc, *den.denoiser, *fm, y);
  write_nndf(out / "field.nndf", result.field, rc.resolved_scale(), rc.resolved_eps());
  result.trace.write_csv(out / "trace.csv");
  if (result.residual_grew_monotonically) {
    std::cout << "warning: data residual grew monotonically over the run\n";
  }
  std::cout << "recovered field in " << out.string() << "\n";
  return 0;
}

int cmd_render_mip(const Cli& cli) {
  const json cfg = cli.resolve();
  const auto& r = cfg.at("render");
  const std::string input = r.at("input").get<std::string>();
  if (input.empty()) throw ValidationError("render.input is required");
  const auto axis = axis_from_name(r.at("axis").get<std::string>());
  const double gamma = r.at("gamma").get<double>();

  const auto loaded = read_nndf(input);
  const auto out = prepare_out(cli, cfg);
  for (int c = 0; c < loaded.field.channel_count(); ++c) {
    const auto& name = loaded.field.channels[static_cast<std::size_t>(c)];
    const auto mo = render_mip_channel(loaded.field, c, axis, gamma, out,
                                       name + "_" + axis_name(axis));
    std::cout << mo.pgm.string() << " (max " << mo.max_value << ")\n";
  }
  return 0;
}

int cmd_trace_plot(const Cli& cli) {
  const json cfg = cli.resolve();
  const auto& tp = cfg.at("trace_plot");
  const std::string input = tp.at("input").get<std::string>();
  if (input.empty()) throw ValidationError("trace_plot.input is required");
  std::vector<std::string> columns;
  for (const auto& c : tp.at("columns")) columns.push_back(c.get<std::string>());

  std::ifstream is(input);
  if (!is) throw IoError("cannot open trace: " + input);
  std::string header;
  if (!std::getline(is, header)) throw IoError("empty trace file: " + input);

  std::vector<std::string> names;
  std::vector<int> keep;
  {
    std::stringstream ss(header);
    std::string cell;
    int idx = 0;
    while (std::getline(ss, cell, ',')) {
      names.push_back(cell);
      if (columns.empty() ||
          std::find(columns.begin(), columns.end(), cell) != columns.end()) {
        keep.push_back(idx);
      }
      ++idx;
    }
  }
  for (const auto& want : columns) {
    if (std::find(names.begin(), names.end(), want) == names.end()) {
      throw ValidationError("trace has no column named '" + want + "'");
    }
  }

  const auto out = prepare_out(cli, cfg);
  std::ofstream os(out / "trace_plot.csv");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    os << names[static_cast<std::size_t>(keep[i])] << (i + 1 < keep.size() ? ',' : '\n');
  }
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      os << cells[static_cast<std::size_t>(keep[i])] << (i + 1 < keep.size() ? ',' : '\n');
    }
  }
  std::cout << (out / "trace_plot.csv").string() << "\n";
  return 0;
}

struct CheckRow {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

int cmd_oracle_check(const Cli& cli) {
  const json cfg = cli.resolve();
  (void)cfg;
  std::vector<CheckRow> rows;
  const auto add = [&](const std::string& name, double value, double bound) {
    rows.push_back({name, value, bound, value <= bound});
  };

  // analytic gaussian denoiser vs quadrature
  {
    const GaussianPrior p{0.3, 1.2};
    const auto grid = oracle::make_density(0.3 - 14.4, 0.3 + 14.4, 10001, [&](double r) {
      return oracle::normal_pdf(r, p.mean, p.stddev);
    });
    double worst = 0.0;
    for (const double sigma : {0.25, 1.0, 2.0}) {
      for (double rho = -6.0; rho <= 6.0; rho += 1.0) {
        Eigen::ArrayXd r(1);
        r << rho;
        worst = std::max(worst, std::abs(analytic_denoise(p, r, sigma)[0] -
                                         oracle::posterior_mean(grid, rho, sigma)));
      }
    }
    add("gaussian denoiser vs quadrature", worst, 1e-8);
  }

  // analytic mixture denoiser vs quadrature
  const MixturePrior mix{{{0.3, -2.0, 0.4}, {0.45, 0.5, 0.25}, {0.25, 2.0, 0.7}}};
  {
    const auto grid = oracle::make_density(-12.0, 12.0, 20001, [&](double r) {
      double acc = 0.0;
      for (const auto& c : mix.components) {
        acc += c.weight * oracle::normal_pdf(r, c.mean, c.stddev);
      }
      return acc;
    });
    double worst = 0.0;
    for (const double sigma : {0.25, 1.0, 2.0}) {
      for (int k = 0; k <= 120; ++k) {
        const double rho = -6.0 + 0.1 * k;
        Eigen::ArrayXd r(1);
        r << rho;
        worst = std::max(worst, std::abs(analytic_denoise(mix, r, sigma)[0] -
                                         oracle::posterior_mean(grid, rho, sigma)));
      }
    }
    add("mixture denoiser vs quadrature", worst, 1e-6);
  }

  // denoiser derivatives vs finite differences
  {
    double worst = 0.0;
    const double h = 1e-5;
    for (const double rho : {-3.0, 0.0, 3.0}) {
      Eigen::ArrayXd r(1), rp(1), rm(1);
      r << rho;
      rp << rho + h;
      rm << rho - h;
      const double fd =
          (analytic_denoise(mix, rp, 0.8)[0] - analytic_denoise(mix, rm, 0.8)[0]) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic_denoise_deriv(mix, r, 0.8)[0] - fd));
    }
    add("mixture derivative vs finite differences", worst, 1e-6);
  }

  // prior score identity for the gaussian case
  {
    const GaussianDenoiser d({0.0, 1.0});
    double worst = 0.0;
    for (double rho = -4.0; rho <= 4.0; rho += 0.25) {
      LatentField f({1, 1, 1}, {"a"});
      f.values.setConstant(rho);
      const auto s = prior_score(d, f, 0.7);
      worst = std::max(worst, std::abs(s.values[0] + rho / (1.0 + 0.49)));
    }
    add("prior score vs closed-form marginal score", worst, 1e-10);
  }

  // likelihood gradient vs finite differences across the shipped models
  {
    double worst = 0.0;
    const GaussianDenoiser d({0.0, 1.0});
    std::vector<std::unique_ptr<ForwardModel>> models;
    models.push_back(std::make_unique<IdentityModel>());
    models.push_back(std::make_unique<LinearProjectionModel>(Axis::Z));
    models.push_back(std::make_unique<BeerLambertModel>(Axis::Y, 100.0));
    const GridDims dims{3, 3, 3};
    rng::Stream stream(4242, rng::StreamKind::Generic, 0);
    for (const auto& fm : models) {
      LatentField rho(dims, {"a"});
      for (Eigen::Index i = 0; i < rho.values.size(); ++i) rho.values[i] = 0.6 * stream.normal();
      Field x = rho.retagged<tag::Physical>();
      x.values = rho.values.exp();
      const auto y = add_photon_noise(fm->apply(x), 5, 1e-2);
      const auto g = likelihood_grad(d, *fm, y, rho, 0.8);
      const auto f = [&](const Eigen::VectorXd& v) {
        LatentField rv = rho;
        rv.values = v.array();
        const auto rho_hat = d.denoise(rv, 0.8);
        Field xv = rho_hat.retagged<tag::Physical>();
        xv.values = rho_hat.values.exp();
        return (-(y.values - fm->apply(xv)).square() / (2.0 * y.values)).sum();
      };
      const auto fd = oracle::finite_diff_grad(f, rho.values.matrix(), 1e-6);
      const double scale = std::max(fd.array().abs().maxCoeff(), 1e-10);
      worst = std::max(worst, (g.values - fd.array()).abs().maxCoeff() / scale);
    }
    add("likelihood gradient vs finite differences", worst, 1e-5);
  }

  // schedule endpoints
  {
    const auto sched = default_anneal_schedule();
    double worst = std::abs(sched.sigma(1) - 1e-2) / 1e-2;
    worst = std::max(worst, std::abs(sched.sigma(600) - 1e2) / 1e2);
    const auto ts = default_train_sigmas();
    worst = std::max(worst, std::abs(ts.at(1) - 1e-2) / 1e-2);
    worst = std::max(worst, std::abs(ts.at(150) - 1e2) / 1e2);
    add("schedule endpoint pinning", worst, 1e-12);
  }

  // metric self-checks
  {
    rng::Stream s1(100, rng::StreamKind::Generic, 0);
    rng::Stream s2(100, rng::StreamKind::Generic, 1);
    Eigen::ArrayXd a(5000), b(5000), c(5000);
    for (int i = 0; i < 5000; ++i) {
      a[i] = s1.normal();
      b[i] = s2.normal();
      c[i] = 1.0 + s2.normal();
    }
    add("ks self-check N(0,1) vs N(0,1), n=5000", oracle::ks_distance(a, b), 0.04);
    add("w1 shifted-gaussian check |w1 - 1|", std::abs(oracle::wasserstein1(a, c) - 1.0), 0.05);
  }

  bool all_pass = true;
  for (const auto& row : rows) {
    std::printf("[%s] %-48s %10.3e <= %8.1e\n", row.pass ? "PASS" : "FAIL", row.name.c_str(),
                row.value, row.bound);
    all_pass = all_pass && row.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonnegative diffusion toolkit"};
  app.require_subcommand(1);

  Cli cli;
  auto* make_dataset = app.add_subcommand("make-dataset", "synthesize a blob training corpus");
  auto* train_cmd = app.add_subcommand("train", "train the neural denoiser");
  auto* generate_cmd = app.add_subcommand("generate", "sample fields from a denoiser");
  auto* invert_cmd = app.add_subcommand("invert", "posterior sampling from a measurement");
  auto* oracle_cmd = app.add_subcommand("oracle-check", "run the verification table");
  auto* render_cmd = app.add_subcommand("render-mip", "maximum intensity projection to PGM");
  auto* trace_cmd = app.add_subcommand("trace-plot", "extract plot-ready columns from a trace");
  for (auto* cmd : {make_dataset, train_cmd, generate_cmd, invert_cmd, oracle_cmd, render_cmd,
                    trace_cmd}) {
    add_common(cmd, cli);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (make_dataset->parsed()) return cmd_make_dataset(cli);
    if (train_cmd->parsed()) return cmd_train(cli);
    if (generate_cmd->parsed()) return cmd_generate(cli);
    if (invert_cmd->parsed()) return cmd_invert(cli);
    if (oracle_cmd->parsed()) return cmd_oracle_check(cli);
    if (render_cmd->parsed()) return cmd_render_mip(cli);
    if (trace_cmd->parsed()) return cmd_trace_plot(cli);
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
