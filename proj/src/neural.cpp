#include "nnd/neural.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

#include "nnd/rng.hpp"

namespace nnd {

using json = nlohmann::json;
using Eigen::MatrixXd;

namespace {

constexpr int kOffsets = 27;  // 3x3x3 neighborhood

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Clamped (replicate-padding) neighbor table: nb[v*27 + k] is the source
/// voxel for kernel offset k at voxel v.
std::vector<std::int32_t> neighbor_table(const GridDims& d) {
  const std::int64_t V = d.voxels();
  std::vector<std::int32_t> nb(static_cast<std::size_t>(V) * kOffsets);
  std::int64_t v = 0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x, ++v) {
        int k = 0;
        for (int dz = -1; dz <= 1; ++dz) {
          const int zz = std::clamp(z + dz, 0, d.nz - 1);
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, d.ny - 1);
            for (int dx = -1; dx <= 1; ++dx, ++k) {
              const int xx = std::clamp(x + dx, 0, d.nx - 1);
              nb[static_cast<std::size_t>(v) * kOffsets + k] =
                  static_cast<std::int32_t>((static_cast<std::int64_t>(zz) * d.ny + yy) * d.nx +
                                            xx);
            }
          }
        }
      }
    }
  }
  return nb;
}

void im2col(const MatrixXd& x, const std::vector<std::int32_t>& nb, MatrixXd& patches) {
  const Eigen::Index cin = x.rows();
  const Eigen::Index V = x.cols();
  patches.resize(cin * kOffsets, V);
  for (Eigen::Index v = 0; v < V; ++v) {
    double* dst = patches.data() + v * patches.rows();
    const auto* row = nb.data() + v * kOffsets;
    for (int k = 0; k < kOffsets; ++k) {
      std::memcpy(dst + k * cin, x.data() + row[k] * cin,
                  static_cast<std::size_t>(cin) * sizeof(double));
    }
  }
}

/// Adjoint of im2col under replicate padding: scatter-add each patch entry
/// back to its (clamped) source voxel.
void col2im(const MatrixXd& dpatches, const std::vector<std::int32_t>& nb, Eigen::Index cin,
            MatrixXd& dx) {
  const Eigen::Index V = dpatches.cols();
  dx.setZero(cin, V);
  for (Eigen::Index v = 0; v < V; ++v) {
    const double* src = dpatches.data() + v * dpatches.rows();
    const auto* row = nb.data() + v * kOffsets;
    for (int k = 0; k < kOffsets; ++k) {
      double* dst = dx.data() + row[k] * cin;
      const double* s = src + k * cin;
      for (Eigen::Index c = 0; c < cin; ++c) dst[c] += s[c];
    }
  }
}

struct LayerSizes {
  Eigen::Index w1, b1, w2, b2, w3, b3;
  Eigen::Index cin1, cin2, cin3;  // patch rows per layer
  Eigen::Index total() const { return w1 + b1 + w2 + b2 + w3 + b3; }
};

LayerSizes layer_sizes(int C) {
  LayerSizes s;
  s.cin1 = (C + 1) * kOffsets;
  s.cin2 = NeuralDenoiser::kHidden * kOffsets;
  s.cin3 = NeuralDenoiser::kHidden * kOffsets;
  s.w1 = NeuralDenoiser::kHidden * s.cin1;
  s.b1 = NeuralDenoiser::kHidden;
  s.w2 = NeuralDenoiser::kHidden * s.cin2;
  s.b2 = NeuralDenoiser::kHidden;
  s.w3 = C * s.cin3;
  s.b3 = C;
  return s;
}

/// Weight/bias views into a flat parameter vector.
template <typename Vec>
struct ParamViews {
  using Mat = std::conditional_t<std::is_const_v<std::remove_reference_t<Vec>>,
                                 Eigen::Map<const MatrixXd>, Eigen::Map<MatrixXd>>;
  using Col = std::conditional_t<std::is_const_v<std::remove_reference_t<Vec>>,
                                 Eigen::Map<const Eigen::VectorXd>, Eigen::Map<Eigen::VectorXd>>;
  Mat w1, w2, w3;
  Col b1, b2, b3;
};

template <typename Vec>
auto param_views(Vec& theta, int C) {
  const LayerSizes s = layer_sizes(C);
  auto* p = theta.data();
  return ParamViews<Vec>{
      {p, NeuralDenoiser::kHidden, s.cin1},
      {p + s.w1 + s.b1, NeuralDenoiser::kHidden, s.cin2},
      {p + s.w1 + s.b1 + s.w2 + s.b2, C, s.cin3},
      {p + s.w1, s.b1},
      {p + s.w1 + s.b1 + s.w2, s.b2},
      {p + s.w1 + s.b1 + s.w2 + s.b2 + s.w3, s.b3},
  };
}

struct ForwardState {
  std::vector<std::int32_t> nb;
  MatrixXd x0;           // (C+1) x V input with the log-sigma channel
  MatrixXd p0, p1, p2;   // patch matrices
  MatrixXd z1, z2;       // pre-activations
  MatrixXd a1, a2;       // softplus activations
  MatrixXd out;          // C x V
};

}  // namespace

Eigen::Index NeuralDenoiser::param_count_for(int channels) {
  return layer_sizes(channels).total();
}

NeuralDenoiser::NeuralDenoiser(Metadata meta) : meta_(std::move(meta)) {
  if (meta_.channels.empty()) throw ValidationError("NeuralDenoiser: no channels");
  theta_ = Eigen::VectorXd::Zero(param_count_for(channel_count()));
  adam_.m = Eigen::VectorXd::Zero(theta_.size());
  adam_.v = Eigen::VectorXd::Zero(theta_.size());
}

void NeuralDenoiser::init_params(std::uint64_t seed) {
  const int C = channel_count();
  const LayerSizes s = layer_sizes(C);
  rng::Stream stream(seed, rng::StreamKind::TrainInit, 0);
  const double sd1 = std::sqrt(2.0 / static_cast<double>(s.cin1));
  const double sd2 = std::sqrt(2.0 / static_cast<double>(s.cin2));
  const double sd3 = 0.01 * std::sqrt(2.0 / static_cast<double>(s.cin3));

  Eigen::Index i = 0;
  for (Eigen::Index k = 0; k < s.w1; ++k) theta_[i++] = sd1 * stream.normal();
  for (Eigen::Index k = 0; k < s.b1; ++k) theta_[i++] = 0.0;
  for (Eigen::Index k = 0; k < s.w2; ++k) theta_[i++] = sd2 * stream.normal();
  for (Eigen::Index k = 0; k < s.b2; ++k) theta_[i++] = 0.0;
  for (Eigen::Index k = 0; k < s.w3; ++k) theta_[i++] = sd3 * stream.normal();
  for (Eigen::Index k = 0; k < s.b3; ++k) theta_[i++] = 0.0;
  meta_.init_seed = seed;
  adam_ = AdamState{Eigen::VectorXd::Zero(theta_.size()), Eigen::VectorXd::Zero(theta_.size()), 0};
}

namespace {

void run_forward(const Eigen::VectorXd& theta, int C, const GridDims& dims,
                 const Eigen::ArrayXd& noisy, double sigma, ForwardState& st) {
  if (!(sigma > 0.0)) throw ValidationError("neural denoiser: sigma must be positive");
  const Eigen::Index V = dims.voxels();
  if (noisy.size() != V * C) {
    throw ValidationError("neural denoiser: input size does not match dims/channels");
  }
  if (!theta.allFinite()) {
    throw DivergenceError("neural denoiser: non-finite parameters (diverged training?)");
  }
  const auto views = param_views(theta, C);

  st.nb = neighbor_table(dims);
  st.x0.resize(C + 1, V);
  st.x0.topRows(C) = Eigen::Map<const MatrixXd>(noisy.data(), C, V);
  st.x0.row(C).setConstant(std::log(sigma));

  im2col(st.x0, st.nb, st.p0);
  st.z1.noalias() = views.w1 * st.p0;
  st.z1.colwise() += views.b1;
  st.a1 = st.z1.unaryExpr([](double x) { return softplus(x); });

  im2col(st.a1, st.nb, st.p1);
  st.z2.noalias() = views.w2 * st.p1;
  st.z2.colwise() += views.b2;
  st.a2 = st.z2.unaryExpr([](double x) { return softplus(x); });

  im2col(st.a2, st.nb, st.p2);
  st.out.noalias() = views.w3 * st.p2;
  st.out.colwise() += views.b3;
}

/// Backward from an output cotangent. Accumulates parameter gradients when
/// grad != nullptr; returns the input gradient when want_input is set.
Eigen::ArrayXd run_backward(const Eigen::VectorXd& theta, int C, const ForwardState& st,
                            const MatrixXd& g3, Eigen::VectorXd* grad, bool want_input) {
  const auto views = param_views(theta, C);
  MatrixXd dp, dx, g;

  if (grad != nullptr) {
    auto gv = param_views(*grad, C);
    gv.w3.noalias() += g3 * st.p2.transpose();
    gv.b3.noalias() += g3.rowwise().sum();
  }
  dp.noalias() = views.w3.transpose() * g3;
  col2im(dp, st.nb, NeuralDenoiser::kHidden, dx);
  g = dx.cwiseProduct(st.z2.unaryExpr([](double x) { return sigmoid(x); }));

  if (grad != nullptr) {
    auto gv = param_views(*grad, C);
    gv.w2.noalias() += g * st.p1.transpose();
    gv.b2.noalias() += g.rowwise().sum();
  }
  dp.noalias() = views.w2.transpose() * g;
  col2im(dp, st.nb, NeuralDenoiser::kHidden, dx);
  g = dx.cwiseProduct(st.z1.unaryExpr([](double x) { return sigmoid(x); }));

  if (grad != nullptr) {
    auto gv = param_views(*grad, C);
    gv.w1.noalias() += g * st.p0.transpose();
    gv.b1.noalias() += g.rowwise().sum();
  }

  if (!want_input) return {};
  dp.noalias() = views.w1.transpose() * g;
  col2im(dp, st.nb, C + 1, dx);
  // drop the log-sigma channel
  const MatrixXd din = dx.topRows(C);
  return Eigen::Map<const Eigen::ArrayXd>(din.data(), din.size());
}

}  // namespace

Eigen::ArrayXd NeuralDenoiser::forward(const GridDims& dims, const Eigen::ArrayXd& noisy,
                                       double sigma) const {
  ForwardState st;
  run_forward(theta_, channel_count(), dims, noisy, sigma, st);
  return Eigen::Map<const Eigen::ArrayXd>(st.out.data(), st.out.size());
}

LatentField NeuralDenoiser::denoise(const LatentField& rho_noisy, double sigma) const {
  if (rho_noisy.channels != meta_.channels) {
    throw ValidationError("neural denoiser: channel mismatch with model metadata");
  }
  LatentField out = rho_noisy;
  out.values = forward(rho_noisy.dims, rho_noisy.values, sigma);
  return out;
}

LatentField NeuralDenoiser::vjp(const LatentField& rho_noisy, double sigma,
                                const LatentField& cotangent) const {
  ForwardState st;
  const int C = channel_count();
  run_forward(theta_, C, rho_noisy.dims, rho_noisy.values, sigma, st);
  const MatrixXd g3 =
      Eigen::Map<const MatrixXd>(cotangent.values.data(), C, rho_noisy.dims.voxels());
  LatentField out = cotangent;
  out.values = run_backward(theta_, C, st, g3, nullptr, true);
  return out;
}

std::unique_ptr<Denoiser::Eval> NeuralDenoiser::evaluate(const LatentField& rho_noisy,
                                                         double sigma) const {
  class NeuralEval final : public Eval {
   public:
    NeuralEval(const NeuralDenoiser& net, const LatentField& rho_noisy, double sigma) : net_(net) {
      run_forward(net.theta_, net.channel_count(), rho_noisy.dims, rho_noisy.values, sigma,
                  state_);
      output_ = rho_noisy;
      output_.values = Eigen::Map<const Eigen::ArrayXd>(state_.out.data(), state_.out.size());
    }
    const LatentField& output() const override { return output_; }
    LatentField pullback(const LatentField& cotangent) const override {
      const int C = net_.channel_count();
      const MatrixXd g3 =
          Eigen::Map<const MatrixXd>(cotangent.values.data(), C, output_.dims.voxels());
      LatentField out = cotangent;
      out.values = run_backward(net_.theta_, C, state_, g3, nullptr, true);
      return out;
    }

   private:
    const NeuralDenoiser& net_;
    ForwardState state_;
    LatentField output_;
  };
  if (rho_noisy.channels != meta_.channels) {
    throw ValidationError("neural denoiser: channel mismatch with model metadata");
  }
  return std::make_unique<NeuralEval>(*this, rho_noisy, sigma);
}

std::string NeuralDenoiser::describe() const {
  return "conv3(" + std::to_string(channel_count() + 1) + "->16->16->" +
         std::to_string(channel_count()) + ")";
}

double NeuralDenoiser::loss_and_param_grad(const GridDims& dims, const Eigen::ArrayXd& clean,
                                           const Eigen::ArrayXd& noisy, double sigma,
                                           Eigen::VectorXd& grad) const {
  const int C = channel_count();
  const Eigen::Index V = dims.voxels();
  if (clean.size() != V * C || noisy.size() != V * C) {
    throw ValidationError("loss_and_param_grad: size mismatch");
  }
  if (grad.size() != theta_.size()) {
    throw ValidationError("loss_and_param_grad: grad buffer size mismatch");
  }
  ForwardState st;
  run_forward(theta_, C, dims, noisy, sigma, st);

  const Eigen::Map<const MatrixXd> target(clean.data(), C, V);
  const MatrixXd diff = st.out - target;
  const double inv_n = 1.0 / static_cast<double>(diff.size());
  const MatrixXd g3 = 2.0 * inv_n * diff;
  run_backward(theta_, C, st, g3, &grad, false);
  return diff.squaredNorm() * inv_n;
}

// --- NNDM container ----------------------------------------------------------

namespace {
constexpr char kMagicM[8] = {'N', 'N', 'D', 'M', '0', '0', '0', '1'};
}

void NeuralDenoiser::save(const std::filesystem::path& path) const {
  json header;
  header["arch"] = {{"kind", "conv3x3x3"},
                    {"hidden", kHidden},
                    {"activation", "softplus"},
                    {"padding", "replicate"}};
  header["channels"] = meta_.channels;
  header["eps"] = meta_.eps;
  json scale = json::object();
  for (const auto& [name, factor] : meta_.scale.factors) scale[name] = factor;
  header["scale"] = scale;
  header["sigma"] = {{"levels", meta_.sigma_levels}, {"lo", meta_.sigma_lo}, {"hi", meta_.sigma_hi}};
  header["adam"] = {{"beta1", meta_.adam.beta1}, {"beta2", meta_.adam.beta2}, {"eps", meta_.adam.eps}};
  header["seed"] = meta_.init_seed;
  header["param_count"] = theta_.size();
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kMagicM, 8);
  const std::uint32_t hlen = static_cast<std::uint32_t>(text.size());
  const unsigned char b[4] = {static_cast<unsigned char>(hlen),
                              static_cast<unsigned char>(hlen >> 8),
                              static_cast<unsigned char>(hlen >> 16),
                              static_cast<unsigned char>(hlen >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.write(reinterpret_cast<const char*>(theta_.data()),
           static_cast<std::streamsize>(theta_.size() * sizeof(double)));
  if (!os) throw IoError("short write: " + path.string());
}

NeuralDenoiser NeuralDenoiser::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagicM, 8) != 0) {
    throw IoError("not an NNDM v1 model file: " + path.string());
  }
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  const std::uint32_t hlen = static_cast<std::uint32_t>(b[0]) |
                             (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
  std::string text(hlen, '\0');
  is.read(text.data(), hlen);
  if (!is) throw IoError("truncated model header: " + path.string());

  Metadata meta;
  Eigen::Index n = 0;
  try {
    const json header = json::parse(text);
    meta.channels = header.at("channels").get<std::vector<std::string>>();
    meta.eps = header.at("eps").get<double>();
    for (const auto& [key, value] : header.at("scale").items()) {
      meta.scale.factors[key] = value.get<double>();
    }
    meta.sigma_levels = header.at("sigma").at("levels").get<int>();
    meta.sigma_lo = header.at("sigma").at("lo").get<double>();
    meta.sigma_hi = header.at("sigma").at("hi").get<double>();
    meta.adam.beta1 = header.at("adam").at("beta1").get<double>();
    meta.adam.beta2 = header.at("adam").at("beta2").get<double>();
    meta.adam.eps = header.at("adam").at("eps").get<double>();
    meta.init_seed = header.at("seed").get<std::uint64_t>();
    n = header.at("param_count").get<Eigen::Index>();
  } catch (const json::exception& e) {
    throw IoError("malformed model header in " + path.string() + ": " + e.what());
  }

  NeuralDenoiser net(meta);
  if (n != net.param_count()) {
    throw IoError("model parameter count mismatch in " + path.string());
  }
  is.read(reinterpret_cast<char*>(net.theta_.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw IoError("truncated model parameters: " + path.string());
  return net;
}

}  // namespace nnd
