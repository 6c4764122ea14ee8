#include "rollnet/bptt.hpp"

#include <algorithm>
#include <cmath>

namespace rollnet {

GradientSet backward(const NetworkParams& params, const ForwardTrace& trace,
                     const Frames& targets, const BackwardOptions& options) {
  const NetworkConfig& cfg = params.config();
  const auto steps = static_cast<Eigen::Index>(trace.size());
  if (steps != targets.rows())
    throw LengthMismatch("trace has " + std::to_string(steps) + " steps, targets have " +
                         std::to_string(targets.rows()));
  if (steps == 0) throw LengthMismatch("backward over an empty trace");
  if (targets.cols() != cfg.num_outputs)
    throw ShapeMismatch("targets have " + std::to_string(targets.cols()) +
                        " columns, network has " + std::to_string(cfg.num_outputs) + " outputs");
  if (options.truncation_window && *options.truncation_window < 1)
    throw InvalidConfig("truncation window must be >= 1");

  GradientSet grad(cfg);
  const double scale = options.loss_scale * 2.0 / static_cast<double>(targets.size());
  const Vector zeros = Vector::Zero(cfg.num_blocks);

  // Error arriving at h(t) and c(t) from step t + 1.
  Vector carry_h = zeros;
  Vector carry_c = zeros;

  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    if (options.truncation_window && (t + 1) % *options.truncation_window == 0) {
      carry_h.setZero();
      carry_c.setZero();
    }
    const StepRecord& rec = trace.steps[t];
    const Vector& prev_h = t > 0 ? trace.steps[t - 1].block_output : zeros;
    const Vector& prev_c = t > 0 ? trace.steps[t - 1].cell_state : zeros;

    // Output layer: dE/dz = dE/dy * y(1 - y).
    const Vector residual = rec.prediction - targets.row(t).transpose();
    const Vector d_out = (scale * residual.array() * rec.prediction.array() *
                          (1.0 - rec.prediction.array()))
                             .matrix();
    grad.output_weights().noalias() += d_out * rec.block_output.transpose();
    grad.output_bias() += d_out;

    const Vector d_h = params.output_weights().transpose() * d_out + carry_h;
    const Vector tanh_c = rec.cell_state.array().tanh().matrix();

    const Vector d_c = (d_h.array() * rec.output_gate.array() * (1.0 - tanh_c.array().square()) +
                        carry_c.array())
                           .matrix();

    Vector d_pre[kGateCount];
    d_pre[int(Gate::output)] = (d_h.array() * tanh_c.array() * rec.output_gate.array() *
                                (1.0 - rec.output_gate.array()))
                                   .matrix();
    d_pre[int(Gate::forget)] = (d_c.array() * prev_c.array() * rec.forget_gate.array() *
                                (1.0 - rec.forget_gate.array()))
                                   .matrix();
    d_pre[int(Gate::input)] = (d_c.array() * rec.cell_candidate.array() *
                               rec.input_gate.array() * (1.0 - rec.input_gate.array()))
                                  .matrix();
    d_pre[int(Gate::cell)] = (d_c.array() * rec.input_gate.array() *
                              (1.0 - rec.cell_candidate.array().square()))
                                 .matrix();

    carry_h.setZero();
    for (int g = 0; g < kGateCount; ++g) {
      const Gate gate = static_cast<Gate>(g);
      grad.input_weights(gate).noalias() += d_pre[g] * rec.input.transpose();
      grad.recurrent_weights(gate).noalias() += d_pre[g] * prev_h.transpose();
      grad.bias(gate) += d_pre[g];
      carry_h.noalias() += params.recurrent_weights(gate).transpose() * d_pre[g];
    }
    carry_c = d_c.cwiseProduct(rec.forget_gate);
  }

  for (double v : grad.values())
    if (!std::isfinite(v)) throw NonFiniteGradient("non-finite gradient entry");
  return grad;
}

GradientSet accumulate(std::span<const GradientSet> grads) {
  if (grads.empty()) throw ShapeMismatch("accumulate needs at least one gradient set");
  GradientSet total = grads.front();
  for (std::size_t k = 1; k < grads.size(); ++k) {
    if (!grads[k].same_shape(total))
      throw ShapeMismatch("gradient set " + std::to_string(k) + " has a different shape");
    auto dst = total.values();
    auto src = grads[k].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return total;
}

std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point,
    double h) {
  if (!(h > 0.0)) throw InvalidConfig("finite-difference step must be > 0");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

GradientSet finite_diff_gradient(const NetworkParams& params, const Frames& inputs,
                                 const Frames& targets, double h) {
  NetworkParams probe = params;
  auto loss = [&](std::span<const double> values) {
    std::copy(values.begin(), values.end(), probe.values().begin());
    return mse_loss(forward_sequence(probe, inputs).predictions(), targets);
  };
  const std::vector<double> numeric = central_difference(loss, params.values(), h);
  GradientSet grad(params.config());
  std::copy(numeric.begin(), numeric.end(), grad.values().begin());
  return grad;
}

GradientComparison compare_gradients(const GradientSet& analytic, const GradientSet& numeric,
                                     double floor) {
  if (!analytic.same_shape(numeric)) throw ShapeMismatch("gradient sets differ in shape");
  GradientComparison worst;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    if (err > worst.max_relative_error || i == 0) worst = {err, i, a, n};
  }
  return worst;
}

}  // namespace rollnet
