#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ginr {

enum class Activation { sine, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

/// Shape of a fully connected network. `depth` counts node layers including input and output,
/// so there are depth - 1 affine maps, numbered 1 .. depth-1. Map `skip_layer` additionally
/// receives the raw inputs (and the conditioning) concatenated to its hidden input.
struct MLPConfig {
  std::size_t input_dim = 100;
  std::size_t cond_dim = 0;
  std::size_t output_dim = 1;
  std::size_t depth = 6;
  std::size_t width = 512;
  Activation activation = Activation::sine;
  double omega0 = 30.0;
  std::optional<std::size_t> skip_layer = 3;
  std::uint64_t init_seed = 0;

  /// Throws ContractError on depth < 2, width < 1, omega0 <= 0, or a skip outside (1, depth).
  void validate() const;
  /// Input width of affine map `layer` (1-based).
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;
  std::size_t parameter_count() const;
};

struct Layer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;
};

/// Activations kept by forward() for the backward pass; features are rows, samples columns.
/// Buffers are reused across calls with the same batch size.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> layer_inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  // backward() scratch
  Eigen::MatrixXd delta;
  Eigen::MatrixXd delta_in;
  Eigen::MatrixXd delta_skip;
  Eigen::MatrixXd delta_raw;
};

struct Gradients {
  std::vector<Layer> layers;
  Eigen::MatrixXd inputs;  // batch x input_dim, only when requested
  Eigen::MatrixXd cond;    // batch x cond_dim, only when cond_dim > 0

  /// Zero gradients shaped like the given model layers.
  static Gradients zeros_like(const std::vector<Layer>& layers);
  Gradients& operator+=(const Gradients& other);
};

/// Named flat view of one parameter tensor, used by the optimizer and checkpoints.
struct TensorView {
  std::string name;
  std::span<double> values;
  std::vector<std::size_t> shape;
};

class MLPModel {
 public:
  MLPModel() = default;

  /// Uniform initialization. Sine: first map U(-1/fan_in, 1/fan_in), later maps
  /// U(-sqrt(6/fan_in)/omega0, +...); ReLU: U(-sqrt(6/fan_in), +...). Biases U(-1/sqrt(fan_in), +...).
  /// Deterministic in config.init_seed.
  static MLPModel init(const MLPConfig& config);
  /// Wraps explicit parameters; shapes must match the config.
  static MLPModel from_layers(const MLPConfig& config, std::vector<Layer> layers);

  const MLPConfig& config() const noexcept { return config_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const Layer& layer(std::size_t index) const { return layers_.at(index - 1); }
  Layer& layer(std::size_t index) { return layers_.at(index - 1); }
  std::size_t parameter_count() const { return config_.parameter_count(); }

  /// inputs: batch x input_dim; cond: batch x cond_dim (empty when cond_dim == 0).
  /// Returns batch x output_dim. Hidden maps apply sin(omega0 * z) or max(0, z); the last is affine.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& cond = {},
                          ForwardCache* cache = nullptr) const;

  /// Exact reverse-mode gradients for the scalar loss whose gradient with respect to the
  /// outputs is loss_grad (batch x output_dim). `cache` must come from forward() on the same batch;
  /// its scratch buffers are overwritten.
  Gradients backward(ForwardCache& cache, const Eigen::MatrixXd& loss_grad,
                     bool input_gradients = false) const;

  std::vector<TensorView> tensors();
  void check_finite() const;

 private:
  MLPConfig config_;
  std::vector<Layer> layers_;
};

std::vector<TensorView> gradient_tensors(Gradients& grads);

/// One free latent vector per training sample / domain (rows).
struct LatentTable {
  Eigen::MatrixXd z;  // m x q
  std::size_t size() const noexcept { return static_cast<std::size_t>(z.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(z.cols()); }
};

/// Gradient of the latent table: batch row r's conditioning gradient is added to table row
/// latent_index[r]. Rows absent from the batch stay zero.
Eigen::MatrixXd latent_gradients(const Gradients& grads, std::span<const std::size_t> latent_index,
                                 const LatentTable& table);

/// Adam with bias correction; moments are allocated on the first step.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// Applies one update to every (parameter, gradient) pair. A non-finite gradient entry throws
/// NumericalError naming the tensor, before anything is modified.
void adam_step(AdamState& state, std::span<TensorView> params, std::span<const TensorView> grads);
void adam_step(AdamState& state, MLPModel& model, Gradients& grads);
void adam_step(AdamState& state, LatentTable& latents, Eigen::MatrixXd& grad);

}  // namespace ginr
