#include <cmath>

#include "ginr/error.hpp"
#include "ginr/mlp.hpp"

namespace ginr {

void adam_step(AdamState& state, std::span<TensorView> params, std::span<const TensorView> grads) {
  if (params.size() != grads.size()) throw ContractError("adam_step: parameter and gradient counts differ");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].values.size() != grads[t].values.size())
      throw ContractError("adam_step: shape mismatch for " + params[t].name);
    for (double g : grads[t].values)
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in tensor " + params[t].name);
  }
  if (!(state.lr > 0.0)) throw ContractError("adam_step: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.values.size(), 0.0);
      state.second_moment.emplace_back(p.values.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw ContractError("adam_step: optimizer state does not match");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].values;
    auto g = grads[k].values;
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.size()) throw ContractError("adam_step: moment shape mismatch for " + params[k].name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      p[i] -= state.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
    }
  }
}

void adam_step(AdamState& state, MLPModel& model, Gradients& grads) {
  auto params = model.tensors();
  auto g = gradient_tensors(grads);
  adam_step(state, std::span<TensorView>(params), std::span<const TensorView>(g));
}

void adam_step(AdamState& state, LatentTable& latents, Eigen::MatrixXd& grad) {
  if (grad.rows() != latents.z.rows() || grad.cols() != latents.z.cols())
    throw ContractError("adam_step: latent gradient shape mismatch");
  std::vector<TensorView> p{{"latents", std::span<double>(latents.z.data(), static_cast<std::size_t>(latents.z.size())),
                             {latents.size(), latents.dim()}}};
  std::vector<TensorView> g{{"latents.grad", std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())),
                             {latents.size(), latents.dim()}}};
  adam_step(state, std::span<TensorView>(p), std::span<const TensorView>(g));
}

}  // namespace ginr
