#include "ginr/mlp.hpp"

#include <cmath>

#include "ginr/error.hpp"
#include "ginr/rng.hpp"
#include "sine_kernels.hpp"

namespace ginr {

std::string_view to_string(Activation a) { return a == Activation::sine ? "sine" : "relu"; }

Activation parse_activation(std::string_view text) {
  if (text == "sine" || text == "siren") return Activation::sine;
  if (text == "relu") return Activation::relu;
  throw ContractError("unknown activation '" + std::string(text) + "'");
}

void MLPConfig::validate() const {
  if (depth < 2) throw ContractError("MLP depth must be at least 2");
  if (width < 1) throw ContractError("MLP width must be at least 1");
  if (input_dim < 1 || output_dim < 1) throw ContractError("MLP input and output dimensions must be positive");
  if (!(omega0 > 0.0)) throw ContractError("omega0 must be positive");
  if (skip_layer && (*skip_layer <= 1 || *skip_layer >= depth))
    throw ContractError("skip layer " + std::to_string(*skip_layer) + " outside (1, " + std::to_string(depth) + ")");
}

std::size_t MLPConfig::fan_in(std::size_t layer) const {
  if (layer < 1 || layer >= depth) throw ContractError("layer index out of range");
  if (layer == 1) return input_dim + cond_dim;
  if (skip_layer && layer == *skip_layer) return width + input_dim + cond_dim;
  return width;
}

std::size_t MLPConfig::fan_out(std::size_t layer) const {
  if (layer < 1 || layer >= depth) throw ContractError("layer index out of range");
  return layer + 1 == depth ? output_dim : width;
}

std::size_t MLPConfig::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 1; l < depth; ++l) total += (fan_in(l) + 1) * fan_out(l);
  return total;
}

MLPModel MLPModel::init(const MLPConfig& config) {
  config.validate();
  MLPModel model;
  model.config_ = config;
  Rng rng(config.init_seed, 0x696e6974ULL);
  for (std::size_t l = 1; l < config.depth; ++l) {
    const auto in = static_cast<Eigen::Index>(config.fan_in(l));
    const auto out = static_cast<Eigen::Index>(config.fan_out(l));
    const double fan = static_cast<double>(in);
    double bound;
    if (config.activation == Activation::sine)
      bound = l == 1 ? 1.0 / fan : std::sqrt(6.0 / fan) / config.omega0;
    else
      bound = std::sqrt(6.0 / fan);
    const double bias_bound = 1.0 / std::sqrt(fan);
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bias_bound, bias_bound);
    model.layers_.push_back(std::move(layer));
  }
  return model;
}

MLPModel MLPModel::from_layers(const MLPConfig& config, std::vector<Layer> layers) {
  config.validate();
  if (layers.size() != config.depth - 1) throw ContractError("layer count does not match depth");
  for (std::size_t l = 1; l < config.depth; ++l) {
    const auto& layer = layers[l - 1];
    if (static_cast<std::size_t>(layer.weight.rows()) != config.fan_out(l) ||
        static_cast<std::size_t>(layer.weight.cols()) != config.fan_in(l) ||
        static_cast<std::size_t>(layer.bias.size()) != config.fan_out(l))
      throw ContractError("layer " + std::to_string(l) + " shape does not match the config");
  }
  MLPModel model;
  model.config_ = config;
  model.layers_ = std::move(layers);
  return model;
}

namespace {

// out.topRows(z.rows()) = act(z)
void activate(const MLPConfig& cfg, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  if (cfg.activation == Activation::relu) {
    out.topRows(z.rows()) = z.cwiseMax(0.0);
  } else if (out.rows() == z.rows()) {
    detail::sine_forward(z.data(), out.data(), static_cast<std::size_t>(z.size()), cfg.omega0);
  } else {
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      detail::sine_forward(z.col(j).data(), out.col(j).data(), static_cast<std::size_t>(z.rows()), cfg.omega0);
  }
}

// g *= act'(z)
void activation_backward(const MLPConfig& cfg, const Eigen::MatrixXd& z, Eigen::MatrixXd& g) {
  if (cfg.activation == Activation::sine)
    detail::sine_backward(z.data(), g.data(), static_cast<std::size_t>(g.size()), cfg.omega0);
  else
    g.array() *= (z.array() > 0.0).cast<double>();
}

}  // namespace

Eigen::MatrixXd MLPModel::forward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& cond,
                                  ForwardCache* cache) const {
  const auto& cfg = config_;
  if (layers_.empty()) throw ContractError("forward on an uninitialized model");
  if (static_cast<std::size_t>(inputs.cols()) != cfg.input_dim)
    throw ContractError("input width " + std::to_string(inputs.cols()) + " != " + std::to_string(cfg.input_dim));
  if (cfg.cond_dim > 0 &&
      (static_cast<std::size_t>(cond.cols()) != cfg.cond_dim || cond.rows() != inputs.rows()))
    throw ContractError("conditioning shape does not match cond_dim and batch size");
  if (cfg.cond_dim == 0 && cond.size() != 0) throw ContractError("conditioning given to an unconditioned model");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.layer_inputs.resize(layers_.size());
  c.pre_activations.resize(layers_.size());

  const Eigen::Index batch = inputs.rows();
  const auto kin = static_cast<Eigen::Index>(cfg.input_dim);
  const auto kc = static_cast<Eigen::Index>(cfg.cond_dim);
  const auto w = static_cast<Eigen::Index>(cfg.width);
  Eigen::MatrixXd& raw = c.layer_inputs[0];
  raw.resize(kin + kc, batch);
  raw.topRows(kin) = inputs.transpose();
  if (kc > 0) raw.bottomRows(kc) = cond.transpose();

  const std::size_t last = cfg.depth - 1;
  for (std::size_t l = 1;; ++l) {
    const Layer& layer = layers_[l - 1];
    Eigen::MatrixXd& z = c.pre_activations[l - 1];
    z.noalias() = layer.weight * c.layer_inputs[l - 1];
    z.colwise() += layer.bias;
    if (l == last) return z.transpose();
    const bool skip = cfg.skip_layer && l + 1 == *cfg.skip_layer;
    Eigen::MatrixXd& next = c.layer_inputs[l];
    next.resize(skip ? w + kin + kc : w, batch);
    activate(cfg, z, next);
    if (skip) next.bottomRows(kin + kc) = raw;
  }
}

Gradients MLPModel::backward(ForwardCache& cache, const Eigen::MatrixXd& loss_grad, bool input_gradients) const {
  const auto& cfg = config_;
  if (cache.layer_inputs.size() != layers_.size()) throw ContractError("backward: cache does not match the model");
  const Eigen::Index batch = cache.layer_inputs.front().cols();
  if (loss_grad.rows() != batch || static_cast<std::size_t>(loss_grad.cols()) != cfg.output_dim)
    throw ContractError("backward: loss gradient shape mismatch");

  const auto kin = static_cast<Eigen::Index>(cfg.input_dim);
  const auto kc = static_cast<Eigen::Index>(cfg.cond_dim);
  const auto w = static_cast<Eigen::Index>(cfg.width);
  const bool want_raw = input_gradients || kc > 0;
  Eigen::MatrixXd& draw = cache.delta_raw;
  if (want_raw) draw.setZero(kin + kc, batch);

  Gradients grads;
  grads.layers.resize(layers_.size());
  const std::size_t last = cfg.depth - 1;

  // Output map: g is loss_grad^T.
  {
    const Layer& layer = layers_[last - 1];
    const Eigen::MatrixXd g = loss_grad.transpose();
    grads.layers[last - 1].weight.noalias() = g * cache.layer_inputs[last - 1].transpose();
    grads.layers[last - 1].bias = g.rowwise().sum();
    if (last == 1) {
      if (want_raw) draw.noalias() += layer.weight.transpose() * g;
    } else {
      Eigen::MatrixXd& din = cfg.skip_layer && last == *cfg.skip_layer ? cache.delta_skip : cache.delta;
      din.noalias() = layer.weight.transpose() * g;
      if (&din == &cache.delta_skip) {
        if (want_raw) draw += din.bottomRows(kin + kc);
        cache.delta = din.topRows(w);
      }
    }
  }
  Eigen::MatrixXd& g = cache.delta;
  for (std::size_t l = last - 1; l >= 1; --l) {
    const Layer& layer = layers_[l - 1];
    activation_backward(cfg, cache.pre_activations[l - 1], g);
    grads.layers[l - 1].weight.noalias() = g * cache.layer_inputs[l - 1].transpose();
    grads.layers[l - 1].bias = g.rowwise().sum();
    if (l == 1) {
      if (want_raw) draw.noalias() += layer.weight.transpose() * g;
      break;
    }
    if (cfg.skip_layer && l == *cfg.skip_layer) {
      Eigen::MatrixXd& din = cache.delta_skip;
      din.noalias() = layer.weight.transpose() * g;
      if (want_raw) draw += din.bottomRows(kin + kc);
      g = din.topRows(w);
    } else {
      cache.delta_in.noalias() = layer.weight.transpose() * g;
      g.swap(cache.delta_in);
    }
  }
  if (input_gradients) grads.inputs = draw.topRows(kin).transpose();
  if (kc > 0) grads.cond = draw.bottomRows(kc).transpose();
  return grads;
}

Gradients Gradients::zeros_like(const std::vector<Layer>& layers) {
  Gradients g;
  for (const auto& l : layers)
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (layers.size() != other.layers.size()) throw ContractError("gradient layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

Eigen::MatrixXd latent_gradients(const Gradients& grads, std::span<const std::size_t> latent_index,
                                 const LatentTable& table) {
  if (static_cast<std::size_t>(grads.cond.rows()) != latent_index.size() || grads.cond.cols() != table.z.cols())
    throw ContractError("conditioning gradient does not match the latent batch");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(table.z.rows(), table.z.cols());
  for (std::size_t r = 0; r < latent_index.size(); ++r) {
    if (latent_index[r] >= table.size()) throw ContractError("latent index out of range");
    g.row(static_cast<Eigen::Index>(latent_index[r])) += grads.cond.row(static_cast<Eigen::Index>(r));
  }
  return g;
}

namespace {

template <class LayerVec>
std::vector<TensorView> views(LayerVec& layers) {
  std::vector<TensorView> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string prefix = "layer" + std::to_string(i + 1);
    out.push_back({prefix + ".weight", std::span<double>(l.weight.data(), static_cast<std::size_t>(l.weight.size())),
                   {static_cast<std::size_t>(l.weight.rows()), static_cast<std::size_t>(l.weight.cols())}});
    out.push_back({prefix + ".bias", std::span<double>(l.bias.data(), static_cast<std::size_t>(l.bias.size())),
                   {static_cast<std::size_t>(l.bias.size())}});
  }
  return out;
}

}  // namespace

std::vector<TensorView> MLPModel::tensors() { return views(layers_); }

std::vector<TensorView> gradient_tensors(Gradients& grads) { return views(grads.layers); }

void MLPModel::check_finite() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].weight.allFinite())
      throw NumericalError("non-finite parameter in layer" + std::to_string(i + 1) + ".weight");
    if (!layers_[i].bias.allFinite())
      throw NumericalError("non-finite parameter in layer" + std::to_string(i + 1) + ".bias");
  }
}

}  // namespace ginr
