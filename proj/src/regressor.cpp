#include "tfold/regressor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "tfold/geometry.hpp"
#include "tfold/io.hpp"

namespace tfold {

namespace {

constexpr char kMagic[8] = {'T', 'F', 'O', 'L', 'D', 'C', 'N', 'N'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr int kGradientChunks = 4;

struct Layout {
  std::size_t w1, b1, w2, b2, w3, b3, w4, b4, total;

  explicit Layout(const RegressorShape& s) {
    const std::size_t k2 = static_cast<std::size_t>(s.kernel) * s.kernel;
    w1 = 0;
    b1 = w1 + static_cast<std::size_t>(s.conv1_filters) * s.channels * k2;
    w2 = b1 + s.conv1_filters;
    b2 = w2 + static_cast<std::size_t>(s.conv2_filters) * s.conv1_filters * k2;
    w3 = b2 + s.conv2_filters;
    b3 = w3 + static_cast<std::size_t>(s.hidden) * s.flat();
    w4 = b3 + s.hidden;
    b4 = w4 + 2 * static_cast<std::size_t>(s.hidden);
    total = b4 + 2;
  }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct ConvGeometry {
  int in_c, in_h, in_w, out_c, out_h, out_w, kernel, stride, pad;

  int rows() const { return in_c * kernel * kernel; }
  int cols() const { return out_h * out_w; }
};

ConvGeometry conv1_geometry(const RegressorShape& s) {
  return {s.channels, s.height, s.width, s.conv1_filters, s.conv1_height(), s.conv1_width(), s.kernel, s.stride, s.pad()};
}

ConvGeometry conv2_geometry(const RegressorShape& s) {
  return {s.conv1_filters, s.conv1_height(), s.conv1_width(), s.conv2_filters, s.conv2_height(), s.conv2_width(),
          s.kernel, s.stride, s.pad()};
}

// Per-sample convolution buffers.
struct ConvBuffers {
  std::vector<double> col1, a1, col2, a2, d1, dcol, d2;

  explicit ConvBuffers(const RegressorShape& s)
      : col1(static_cast<std::size_t>(conv1_geometry(s).rows()) * conv1_geometry(s).cols()),
        a1(static_cast<std::size_t>(s.conv1_filters) * s.conv1_height() * s.conv1_width()),
        col2(static_cast<std::size_t>(conv2_geometry(s).rows()) * conv2_geometry(s).cols()),
        a2(static_cast<std::size_t>(s.flat())),
        d1(a1.size()),
        dcol(col2.size()),
        d2(a2.size()) {}
};

// col[(c * k + ky) * k + kx][oy * out_w + ox] = in[c][oy * stride - pad + ky][ox * stride - pad + kx], zero outside.
void im2col(const double* in, const ConvGeometry& g, double* col) {
  const int k = g.kernel;
  const std::size_t n = static_cast<std::size_t>(g.cols());
  for (int c = 0; c < g.in_c; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* out = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(out, out + g.out_w, 0.0);
            continue;
          }
          const double* src = in + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            out[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : 0.0;
          }
        }
      }
}

void col2im_add(const double* col, const ConvGeometry& g, double* in) {
  const int k = g.kernel;
  const std::size_t n = static_cast<std::size_t>(g.cols());
  for (int c = 0; c < g.in_c; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * g.out_w;
          double* dst = in + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
}

void conv_forward(const double* in, const ConvGeometry& g, const double* w, const double* b, double* col, double* out) {
  im2col(in, g, col);
  MatMap o(out, g.out_c, g.cols());
  o.noalias() = ConstMatMap(w, g.out_c, g.rows()) * ConstMatMap(col, g.rows(), g.cols());
  o.colwise() += ConstVecMap(b, g.out_c);
  o = o.cwiseMax(0.0);
}

// d_out must already be masked by the ReLU. Accumulates dw/db; writes the
// input gradient into d_in when it is non-null.
void conv_backward(const double* col, const ConvGeometry& g, const double* w, const double* d_out, double* dw,
                   double* db, double* dcol, double* d_in) {
  ConstMatMap go(d_out, g.out_c, g.cols());
  MatMap(dw, g.out_c, g.rows()).noalias() += go * ConstMatMap(col, g.rows(), g.cols()).transpose();
  VecMap(db, g.out_c) += go.rowwise().sum();
  if (!d_in) return;
  MatMap dc(dcol, g.rows(), g.cols());
  dc.noalias() = ConstMatMap(w, g.out_c, g.rows()).transpose() * go;
  std::fill(d_in, d_in + static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w, 0.0);
  col2im_add(dcol, g, d_in);
}

// Forward pass over a group of samples; the dense layers run as one matrix
// product over the group. Row b of the returned matrix is sample b's output.
struct GroupPass {
  std::vector<ConvBuffers> conv;
  RowMatrix a2;  // group x flat
  RowMatrix h;   // group x hidden, after ReLU
  RowMatrix y;   // group x 2

  GroupPass(const RegressorShape& s, const Layout& L, const double* p, const PlanarImage* inputs, std::size_t count)
      : conv(count, ConvBuffers(s)), a2(count, s.flat()) {
    const ConvGeometry g1 = conv1_geometry(s);
    const ConvGeometry g2 = conv2_geometry(s);
    for (std::size_t b = 0; b < count; ++b) {
      ConvBuffers& c = conv[b];
      conv_forward(inputs[b].data.data(), g1, p + L.w1, p + L.b1, c.col1.data(), c.a1.data());
      conv_forward(c.a1.data(), g2, p + L.w2, p + L.b2, c.col2.data(), c.a2.data());
      a2.row(static_cast<Eigen::Index>(b)) = ConstVecMap(c.a2.data(), s.flat()).transpose();
    }
    h.noalias() = a2 * ConstMatMap(p + L.w3, s.hidden, s.flat()).transpose();
    h.rowwise() += ConstVecMap(p + L.b3, s.hidden).transpose();
    h = h.cwiseMax(0.0);
    y.noalias() = h * ConstMatMap(p + L.w4, 2, s.hidden).transpose();
    y.rowwise() += ConstVecMap(p + L.b4, 2).transpose();
  }
};

// Adds the group's contribution to `grad`, with each squared error weighted by
// `scale`; returns the group's weighted loss.
double group_gradient(const RegressorShape& s, const Layout& L, const double* p, const PlanarImage* inputs,
                      const std::array<double, 2>* targets, std::size_t count, double scale, double* grad) {
  GroupPass pass(s, L, p, inputs, count);
  RowMatrix dy(static_cast<Eigen::Index>(count), 2);
  double loss = 0.0;
  for (std::size_t b = 0; b < count; ++b)
    for (int k = 0; k < 2; ++k) {
      const double e = pass.y(static_cast<Eigen::Index>(b), k) - targets[b][k];
      loss += scale * e * e;
      dy(static_cast<Eigen::Index>(b), k) = 2.0 * scale * e;
    }
  MatMap(grad + L.w4, 2, s.hidden).noalias() += dy.transpose() * pass.h;
  VecMap(grad + L.b4, 2) += dy.colwise().sum().transpose();
  RowMatrix dh = dy * ConstMatMap(p + L.w4, 2, s.hidden);
  dh = (pass.h.array() > 0.0).select(dh, 0.0);
  MatMap(grad + L.w3, s.hidden, s.flat()).noalias() += dh.transpose() * pass.a2;
  VecMap(grad + L.b3, s.hidden) += dh.colwise().sum().transpose();
  RowMatrix da2 = dh * ConstMatMap(p + L.w3, s.hidden, s.flat());
  da2 = (pass.a2.array() > 0.0).select(da2, 0.0);
  const ConvGeometry g1 = conv1_geometry(s);
  const ConvGeometry g2 = conv2_geometry(s);
  for (std::size_t b = 0; b < count; ++b) {
    ConvBuffers& c = pass.conv[b];
    VecMap(c.d2.data(), s.flat()) = da2.row(static_cast<Eigen::Index>(b)).transpose();
    conv_backward(c.col2.data(), g2, p + L.w2, c.d2.data(), grad + L.w2, grad + L.b2, c.dcol.data(), c.d1.data());
    for (std::size_t i = 0; i < c.d1.size(); ++i)
      if (c.a1[i] <= 0.0) c.d1[i] = 0.0;
    conv_backward(c.col1.data(), g1, p + L.w1, c.d1.data(), grad + L.w1, grad + L.b1, nullptr, nullptr);
  }
  return loss;
}

void check_inputs(const RegressorShape& s, std::span<const PlanarImage> inputs,
                  std::span<const std::array<double, 2>> targets, std::span<double> gradient, std::size_t count) {
  if (inputs.size() != targets.size()) throw DomainError("inputs and targets differ in length");
  if (inputs.empty()) throw DomainError("empty batch");
  if (gradient.size() != count) throw DomainError("gradient buffer has the wrong length");
  for (const PlanarImage& im : inputs)
    if (im.channels != s.channels || im.height != s.height || im.width != s.width)
      throw DomainError("input is " + std::to_string(im.channels) + "x" + std::to_string(im.height) + "x" +
                        std::to_string(im.width) + ", model expects " + std::to_string(s.channels) + "x" +
                        std::to_string(s.height) + "x" + std::to_string(s.width));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    if (pos_ + width > bytes_.size()) throw IoError("truncated regressor file");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += width;
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = sizeof kMagic;
};

}  // namespace

std::size_t RegressorShape::parameter_count() const { return Layout(*this).total; }

void RegressorShape::validate() const {
  if (channels <= 0 || height <= 0 || width <= 0) throw ValidationError("shape", "input dimensions must be positive");
  if (conv1_filters <= 0 || conv2_filters <= 0 || hidden <= 0)
    throw ValidationError("shape", "layer sizes must be positive");
  if (kernel <= 0 || kernel % 2 == 0) throw ValidationError("kernel", "must be odd and positive");
  if (stride <= 0) throw ValidationError("stride", "must be positive");
  if (conv2_height() <= 0 || conv2_width() <= 0) throw ValidationError("shape", "input too small for two convolutions");
}

TorqueRegressor::TorqueRegressor(const RegressorShape& shape, std::uint64_t seed) : shape_(shape) {
  shape.validate();
  const Layout L(shape);
  params_.assign(L.total, 0.0);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t from, std::size_t to, double fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (std::size_t i = from; i < to; ++i) params_[i] = dist(rng);
  };
  const double k2 = static_cast<double>(shape.kernel) * shape.kernel;
  fill(L.w1, L.b1, shape.channels * k2);
  fill(L.w2, L.b2, shape.conv1_filters * k2);
  fill(L.w3, L.b3, shape.flat());
  fill(L.w4, L.b4, shape.hidden);
}

std::array<double, 2> TorqueRegressor::forward(const PlanarImage& input) const {
  const std::array<double, 2> dummy{};
  std::vector<double> unused;
  check_inputs(shape_, std::span(&input, 1), std::span(&dummy, 1), std::span(unused), 0);
  const GroupPass pass(shape_, Layout(shape_), params_.data(), &input, 1);
  return {pass.y(0, 0), pass.y(0, 1)};
}

Torques TorqueRegressor::predict(const PlanarImage& input) const {
  const auto y = forward(input);
  return {y[0] * target_std[0] + target_mean[0], y[1] * target_std[1] + target_mean[1]};
}

std::array<double, 2> TorqueRegressor::standardize(const Torques& t) const {
  return {(t.bending - target_mean[0]) / target_std[0], (t.twisting - target_mean[1]) / target_std[1]};
}

double TorqueRegressor::loss_and_gradient(std::span<const PlanarImage> inputs,
                                          std::span<const std::array<double, 2>> targets,
                                          std::span<double> gradient) const {
  check_inputs(shape_, inputs, targets, gradient, params_.size());
  const Layout L(shape_);
  const std::size_t n = inputs.size();
  const double scale = 0.5 / static_cast<double>(n);
  const int chunks = static_cast<int>(std::min<std::size_t>(kGradientChunks, n));
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(chunks));
  std::vector<double> losses(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    std::vector<double>& g = partial[static_cast<std::size_t>(c)];
    g.assign(params_.size(), 0.0);
    const std::size_t lo = n * c / chunks;
    const std::size_t hi = n * (c + 1) / chunks;
    losses[static_cast<std::size_t>(c)] =
        group_gradient(shape_, L, params_.data(), &inputs[lo], &targets[lo], hi - lo, scale, g.data());
  }
  std::copy(partial[0].begin(), partial[0].end(), gradient.begin());
  for (int c = 1; c < chunks; ++c) {
    const std::vector<double>& g = partial[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < g.size(); ++i) gradient[i] += g[i];
  }
  return std::accumulate(losses.begin(), losses.end(), 0.0);
}

double TorqueRegressor::loss_and_gradient_serial(std::span<const PlanarImage> inputs,
                                                 std::span<const std::array<double, 2>> targets,
                                                 std::span<double> gradient) const {
  check_inputs(shape_, inputs, targets, gradient, params_.size());
  const Layout L(shape_);
  const double scale = 0.5 / static_cast<double>(inputs.size());
  std::fill(gradient.begin(), gradient.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    loss += group_gradient(shape_, L, params_.data(), &inputs[i], &targets[i], 1, scale, gradient.data());
  return loss;
}

TrainResult train_regressor(std::span<const RegressorSample> samples, const RegressorConfig& config) {
  if (samples.empty()) throw DomainError("training set is empty");
  if (config.epochs <= 0) throw ValidationError("epochs", "must be positive");
  if (config.batch_size <= 0) throw ValidationError("batch_size", "must be positive");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning_rate", "must be positive");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) throw ValidationError("momentum", "must lie in [0, 1)");

  TrainResult result{TorqueRegressor(config.shape, config.seed), {}};
  TorqueRegressor& model = result.model;
  const std::size_t n = samples.size();
  std::array<double, 2> mean{};
  for (const RegressorSample& s : samples) {
    mean[0] += s.target.bending;
    mean[1] += s.target.twisting;
  }
  mean[0] /= n;
  mean[1] /= n;
  std::array<double, 2> var{};
  for (const RegressorSample& s : samples) {
    var[0] += (s.target.bending - mean[0]) * (s.target.bending - mean[0]);
    var[1] += (s.target.twisting - mean[1]) * (s.target.twisting - mean[1]);
  }
  model.target_mean = mean;
  for (int k = 0; k < 2; ++k) {
    const double sd = std::sqrt(var[k] / n);
    model.target_std[k] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<std::array<double, 2>> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = model.standardize(samples[i].target);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(config.seed, 0x5eed));
  std::vector<double>& params = model.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> gradient(params.size());
  std::vector<PlanarImage> batch_in;
  std::vector<std::array<double, 2>> batch_t;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      batch_in.clear();
      batch_t.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        if (config.augment)
          batch_in.push_back(
              augment(samples[idx].input, mix_seed(config.seed, epoch * n + idx + 1), config.augment_range));
        else
          batch_in.push_back(samples[idx].input);
        batch_t.push_back(targets[idx]);
      }
      const double loss = model.loss_and_gradient(batch_in, batch_t, gradient);
      if (!std::isfinite(loss)) throw TrainingError(epoch + 1, "training loss is not finite");
      epoch_loss += loss * static_cast<double>(stop - start);
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] - config.learning_rate * gradient[i];
        params[i] += velocity[i];
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw TrainingError(epoch + 1, "training loss is not finite");
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

RegressorEvaluation evaluate_regressor(const TorqueRegressor& model, std::span<const RegressorSample> samples) {
  if (samples.empty()) throw DomainError("evaluation set is empty");
  RegressorEvaluation out;
  out.predictions.resize(samples.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < samples.size(); ++i) out.predictions[i] = model.predict(samples[i].input);
  double sb = 0.0;
  double st = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double eb = out.predictions[i].bending - samples[i].target.bending;
    const double et = out.predictions[i].twisting - samples[i].target.twisting;
    sb += eb * eb;
    st += et * et;
  }
  out.bending_rmse = std::sqrt(sb / samples.size());
  out.twisting_rmse = std::sqrt(st / samples.size());
  return out;
}

std::vector<RegressorSample> prepare_samples(const TorqueDataset& dataset, const LedCamera& camera) {
  std::vector<RegressorSample> out(dataset.samples.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < dataset.samples.size(); ++i)
    out[i] = {prepare_input(dataset.samples[i].frame, dataset.reference, camera), dataset.samples[i].torques};
  return out;
}

std::string encode_regressor(const TorqueRegressor& model) {
  const RegressorShape& s = model.shape();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kFormatVersion);
  for (int v : {s.channels, s.height, s.width, s.conv1_filters, s.conv2_filters, s.kernel, s.stride, s.hidden})
    put_u32(out, static_cast<std::uint32_t>(v));
  for (int k = 0; k < 2; ++k) {
    put_f64(out, model.target_mean[k]);
    put_f64(out, model.target_std[k]);
  }
  put_u64(out, model.parameters().size());
  for (double p : model.parameters()) put_f64(out, p);
  return out;
}

TorqueRegressor decode_regressor(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw IoError("not a regressor file");
  Reader in(bytes);
  const auto version = in.uint(4);
  if (version != kFormatVersion) throw IoError("unsupported regressor format version " + std::to_string(version));
  RegressorShape s;
  for (int* f : {&s.channels, &s.height, &s.width, &s.conv1_filters, &s.conv2_filters, &s.kernel, &s.stride, &s.hidden})
    *f = static_cast<int>(in.uint(4));
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw IoError(std::string("corrupt regressor shape: ") + e.what());
  }
  TorqueRegressor model(s, 0);
  for (int k = 0; k < 2; ++k) {
    model.target_mean[k] = in.f64();
    model.target_std[k] = in.f64();
  }
  const auto count = in.uint(8);
  if (count != model.parameters().size()) throw IoError("parameter count does not match the stored shape");
  for (double& p : model.parameters()) p = in.f64();
  if (!in.done()) throw IoError("trailing bytes after regressor parameters");
  return model;
}

void save_regressor(const std::string& path, const TorqueRegressor& model) {
  write_file_atomic(path, encode_regressor(model));
}

TorqueRegressor load_regressor(const std::string& path) { return decode_regressor(read_file(path)); }

}  // namespace tfold
