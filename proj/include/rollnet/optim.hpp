#ifndef ROLLNET_OPTIM_HPP
#define ROLLNET_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "rollnet/bptt.hpp"
#include "rollnet/network.hpp"

namespace rollnet {

enum class RPropVariant { plain, with_backtracking };

struct RPropConfig {
  double delta_zero = 0.1;
  double delta_min = 1e-6;
  double delta_max = 50.0;
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  RPropVariant variant = RPropVariant::plain;

  void validate() const;
};

struct RPropState {
  std::vector<double> step_sizes;
  std::vector<std::int8_t> prev_grad_sign;
  std::vector<double> prev_weight_delta;
};

struct GDConfig {
  double learning_rate = 0.01;

  void validate() const;
};

RPropState rprop_init(const NetworkParams& params, const RPropConfig& config);

/// One batch RProp update in place. Only the sign of each gradient entry is
/// used: the step size grows by eta_plus while the sign persists and shrinks
/// by eta_minus when it flips; the weight then moves by -sign(g) * step.
///
/// With backtracking, a sign flip undoes the previous weight change instead
/// of taking a new step, and clears the stored sign so the next update skips
/// adaptation.
void rprop_step(NetworkParams& params, const GradientSet& grads, RPropState& state,
                const RPropConfig& config);

/// w <- w - learning_rate * g
void gd_step(NetworkParams& params, const GradientSet& grads, const GDConfig& config);

}  // namespace rollnet

#endif  // ROLLNET_OPTIM_HPP
