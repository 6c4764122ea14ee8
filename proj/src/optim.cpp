#include "rollnet/optim.hpp"

#include <algorithm>
#include <cmath>

namespace rollnet {
namespace {

std::int8_t sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

}  // namespace

void RPropConfig::validate() const {
  if (!(delta_min > 0.0 && delta_min <= delta_zero && delta_zero <= delta_max))
    throw InvalidConfig("RProp requires 0 < delta_min <= delta_zero <= delta_max");
  if (!(eta_minus > 0.0 && eta_minus < 1.0 && eta_plus > 1.0))
    throw InvalidConfig("RProp requires 0 < eta_minus < 1 < eta_plus");
}

void GDConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be > 0");
}

RPropState rprop_init(const NetworkParams& params, const RPropConfig& config) {
  config.validate();
  const std::size_t n = params.size();
  return {std::vector<double>(n, config.delta_zero), std::vector<std::int8_t>(n, 0),
          std::vector<double>(n, 0.0)};
}

void rprop_step(NetworkParams& params, const GradientSet& grads, RPropState& state,
                const RPropConfig& config) {
  const std::size_t n = params.size();
  if (!grads.same_shape(params) || grads.size() != n || state.step_sizes.size() != n ||
      state.prev_grad_sign.size() != n || state.prev_weight_delta.size() != n)
    throw ShapeMismatch("rprop_step: params, gradients and state differ in shape");

  auto w = params.values();
  auto g = grads.values();
  const bool backtrack = config.variant == RPropVariant::with_backtracking;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int8_t sign = sign_of(g[i]);
    const int agreement = state.prev_grad_sign[i] * sign;
    double& step = state.step_sizes[i];

    if (agreement > 0) {
      step = std::min(step * config.eta_plus, config.delta_max);
    } else if (agreement < 0) {
      step = std::max(step * config.eta_minus, config.delta_min);
      if (backtrack) {
        const double revert = -state.prev_weight_delta[i];
        w[i] += revert;
        state.prev_weight_delta[i] = revert;
        state.prev_grad_sign[i] = 0;
        continue;
      }
    }

    double delta = 0.0;
    if (sign > 0)
      delta = -step;
    else if (sign < 0)
      delta = step;
    w[i] += delta;
    state.prev_weight_delta[i] = delta;
    state.prev_grad_sign[i] = sign;
  }
}

void gd_step(NetworkParams& params, const GradientSet& grads, const GDConfig& config) {
  if (!grads.same_shape(params) || grads.size() != params.size())
    throw ShapeMismatch("gd_step: params and gradients differ in shape");
  auto w = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * g[i];
}

}  // namespace rollnet
