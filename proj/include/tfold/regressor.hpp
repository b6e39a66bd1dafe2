// Small convolutional torque regressor trained from scratch on LED-region
// inputs: conv(5x5, stride 2) -> ReLU -> conv(5x5, stride 2) -> ReLU ->
// dense -> ReLU -> dense(2). Targets are standardized with the training
// mean/std, which travel with the model.

#ifndef TFOLD_REGRESSOR_HPP
#define TFOLD_REGRESSOR_HPP

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfold/imaging.hpp"
#include "tfold/proprio.hpp"

namespace tfold {

class TrainingError : public std::runtime_error {
 public:
  TrainingError(int epoch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct RegressorShape {
  int channels = 2;
  int height = 32;
  int width = 48;
  int conv1_filters = 8;
  int conv2_filters = 16;
  int kernel = 5;
  int stride = 2;
  int hidden = 64;

  int pad() const { return kernel / 2; }
  int conv1_height() const { return (height + 2 * pad() - kernel) / stride + 1; }
  int conv1_width() const { return (width + 2 * pad() - kernel) / stride + 1; }
  int conv2_height() const { return (conv1_height() + 2 * pad() - kernel) / stride + 1; }
  int conv2_width() const { return (conv1_width() + 2 * pad() - kernel) / stride + 1; }
  int flat() const { return conv2_filters * conv2_height() * conv2_width(); }
  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const RegressorShape&) const = default;
};

struct RegressorSample {
  PlanarImage input;
  Torques target;
};

class TorqueRegressor {
 public:
  TorqueRegressor() = default;
  /// He-initialized weights, zero biases.
  TorqueRegressor(const RegressorShape& shape, std::uint64_t seed);

  const RegressorShape& shape() const { return shape_; }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  std::array<double, 2> target_mean{0.0, 0.0};
  std::array<double, 2> target_std{1.0, 1.0};

  /// Standardized outputs.
  std::array<double, 2> forward(const PlanarImage& input) const;
  /// De-standardized torques, N*mm.
  Torques predict(const PlanarImage& input) const;

  /// Mean squared error over the batch and both standardized outputs. Writes
  /// d(loss)/d(parameters) into `gradient`.
  /// The batch is split into fixed chunks evaluated in parallel and summed in
  /// chunk order, so the result does not depend on the thread count.
  double loss_and_gradient(std::span<const PlanarImage> inputs, std::span<const std::array<double, 2>> targets,
                           std::span<double> gradient) const;
  /// One sample at a time, accumulated in order.
  double loss_and_gradient_serial(std::span<const PlanarImage> inputs, std::span<const std::array<double, 2>> targets,
                                  std::span<double> gradient) const;

  std::array<double, 2> standardize(const Torques& t) const;

 private:
  RegressorShape shape_;
  std::vector<double> params_;
};

struct RegressorConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 7;
  bool augment = false;
  AugmentRange augment_range;
  RegressorShape shape;
};

struct TrainResult {
  TorqueRegressor model;
  /// Mean training loss per epoch.
  std::vector<double> loss_history;
};

/// Mini-batch gradient descent with momentum on shuffled batches. Throws
/// DomainError for an empty dataset or inputs of the wrong size, and
/// TrainingError when the loss stops being finite.
TrainResult train_regressor(std::span<const RegressorSample> samples, const RegressorConfig& config);

struct RegressorEvaluation {
  double bending_rmse = 0.0;
  double twisting_rmse = 0.0;
  std::vector<Torques> predictions;
};

RegressorEvaluation evaluate_regressor(const TorqueRegressor& model, std::span<const RegressorSample> samples);

/// Runs prepare_input on every frame of the dataset.
std::vector<RegressorSample> prepare_samples(const TorqueDataset& dataset, const LedCamera& camera);

/// Magic "TFOLDCNN", u32 version, u32 shape fields, f64 target mean/std,
/// u64 parameter count, f64 parameters; all little-endian.
std::string encode_regressor(const TorqueRegressor& model);
TorqueRegressor decode_regressor(const std::string& bytes);
void save_regressor(const std::string& path, const TorqueRegressor& model);
TorqueRegressor load_regressor(const std::string& path);

}  // namespace tfold

#endif  // TFOLD_REGRESSOR_HPP
