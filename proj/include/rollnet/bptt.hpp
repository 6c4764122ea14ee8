#ifndef ROLLNET_BPTT_HPP
#define ROLLNET_BPTT_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rollnet/network.hpp"

namespace rollnet {

/// dE/dtheta, shape-congruent with the NetworkParams it was computed for.
using GradientSet = ParameterVector<GradientTag>;

struct BackwardOptions {
  /// When set, error does not flow across boundaries between consecutive
  /// windows of this many steps (windows start at t = 0).
  std::optional<int> truncation_window;
  /// Gradient of loss_scale * E instead of E.
  double loss_scale = 1.0;
};

/// Exact gradient of mse_loss(trace.predictions(), targets) by
/// backpropagation through time.
GradientSet backward(const NetworkParams& params, const ForwardTrace& trace,
                     const Frames& targets, const BackwardOptions& options = {});

/// Element-wise sum, added in the order given.
GradientSet accumulate(std::span<const GradientSet> grads);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h of an arbitrary
/// scalar function.
std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point,
    double h);

/// Central-difference gradient of the sequence MSE with respect to every
/// parameter. Costs two forward passes per parameter.
GradientSet finite_diff_gradient(const NetworkParams& params, const Frames& inputs,
                                 const Frames& targets, double h);

struct GradientComparison {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Largest |a - n| / max(|a|, |n|, floor) over all entries.
GradientComparison compare_gradients(const GradientSet& analytic, const GradientSet& numeric,
                                     double floor = 1e-4);

}  // namespace rollnet

#endif  // ROLLNET_BPTT_HPP
