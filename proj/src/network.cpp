#include "rollnet/network.hpp"

#include <cmath>
#include <random>

namespace rollnet {
namespace {

Vector logistic(const Vector& v) {
  return (1.0 + (-v.array()).exp()).inverse().matrix();
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite())
    throw NonFiniteActivation(std::string("non-finite ") + what + " in forward step", -1);
}

}  // namespace

const char* gate_name(Gate g) {
  switch (g) {
    case Gate::input: return "input";
    case Gate::forget: return "forget";
    case Gate::output: return "output";
    case Gate::cell: return "cell";
  }
  return "?";
}

void NetworkConfig::validate() const {
  if (num_inputs < 1 || num_blocks < 1 || num_outputs < 1)
    throw InvalidConfig("num_inputs, num_blocks and num_outputs must be >= 1");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
    throw InvalidConfig("init_scale must be finite and >= 0");
}

std::size_t NetworkConfig::parameter_count() const {
  const std::size_t in = num_inputs, blocks = num_blocks, out = num_outputs;
  return 4 * blocks * (in + blocks + 1) + out * (blocks + 1);
}

std::string parameter_name(const NetworkConfig& config, std::size_t index) {
  const std::size_t in = config.num_inputs, blocks = config.num_blocks;
  const std::size_t gate_size = blocks * (in + blocks + 1);
  auto pair = [](std::size_t r, std::size_t c) {
    return "[" + std::to_string(r) + "," + std::to_string(c) + "]";
  };
  if (index < kGateCount * gate_size) {
    const std::string gate = gate_name(static_cast<Gate>(index / gate_size));
    std::size_t k = index % gate_size;
    if (k < blocks * in) return gate + ".W" + pair(k / in, k % in);
    k -= blocks * in;
    if (k < blocks * blocks) return gate + ".U" + pair(k / blocks, k % blocks);
    return gate + ".b[" + std::to_string(k - blocks * blocks) + "]";
  }
  std::size_t k = index - kGateCount * gate_size;
  if (k < config.num_outputs * blocks) return "out.V" + pair(k / blocks, k % blocks);
  return "out.d[" + std::to_string(k - config.num_outputs * blocks) + "]";
}

NetworkParams init_params(const NetworkConfig& config) {
  config.validate();
  NetworkParams params(config);
  std::mt19937_64 gen(config.rng_seed);
  const double scale = config.init_scale;
  auto draw = [&] {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    return scale * (2.0 * unit - 1.0);
  };
  for (int g = 0; g < kGateCount; ++g) {
    const Gate gate = static_cast<Gate>(g);
    auto w = params.input_weights(gate);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = draw();
    auto u = params.recurrent_weights(gate);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = draw();
    params.bias(gate).setConstant(gate == Gate::forget ? 1.0 : 0.0);
  }
  auto v = params.output_weights();
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = draw();
  params.output_bias().setZero();
  return params;
}

Frames ForwardTrace::predictions() const {
  if (steps.empty()) return {};
  Frames out(static_cast<Eigen::Index>(steps.size()), steps.front().prediction.size());
  for (std::size_t t = 0; t < steps.size(); ++t) out.row(t) = steps[t].prediction.transpose();
  return out;
}

StepRecord forward_step(const NetworkParams& params, const Eigen::Ref<const Vector>& x,
                        const StepState& prev) {
  const NetworkConfig& cfg = params.config();
  if (x.size() != cfg.num_inputs)
    throw ShapeMismatch("input has " + std::to_string(x.size()) + " entries, network expects " +
                        std::to_string(cfg.num_inputs));
  if (prev.block_outputs.size() != cfg.num_blocks || prev.cell_states.size() != cfg.num_blocks)
    throw ShapeMismatch("previous state does not match the number of blocks");

  auto preactivation = [&](Gate g) -> Vector {
    return params.input_weights(g) * x + params.recurrent_weights(g) * prev.block_outputs +
           params.bias(g);
  };

  StepRecord rec;
  rec.input = x;
  rec.input_gate = logistic(preactivation(Gate::input));
  rec.forget_gate = logistic(preactivation(Gate::forget));
  rec.output_gate = logistic(preactivation(Gate::output));
  rec.cell_preactivation = preactivation(Gate::cell);
  rec.cell_candidate = rec.cell_preactivation.array().tanh().matrix();
  rec.cell_state = rec.forget_gate.cwiseProduct(prev.cell_states) +
                   rec.input_gate.cwiseProduct(rec.cell_candidate);
  rec.block_output = rec.output_gate.cwiseProduct(rec.cell_state.array().tanh().matrix());
  rec.output_preactivation = params.output_weights() * rec.block_output + params.output_bias();
  rec.prediction = logistic(rec.output_preactivation);

  require_finite(rec.cell_state, "cell state");
  require_finite(rec.block_output, "block output");
  require_finite(rec.prediction, "prediction");
  return rec;
}

ForwardTrace forward_sequence(const NetworkParams& params, const Frames& inputs) {
  if (inputs.rows() < 1) throw LengthMismatch("forward_sequence needs at least one input");
  ForwardTrace trace;
  trace.steps.reserve(inputs.rows());
  StepState state = StepState::zeros(params.config().num_blocks);
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
    try {
      trace.steps.push_back(forward_step(params, inputs.row(t).transpose(), state));
    } catch (const NonFiniteActivation& e) {
      throw NonFiniteActivation(std::string(e.what()) + " at timestep " + std::to_string(t), t);
    }
    state = trace.steps.back().state();
  }
  return trace;
}

double mse_loss(const Frames& predictions, const Frames& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw LengthMismatch("predictions are " + std::to_string(predictions.rows()) + "x" +
                         std::to_string(predictions.cols()) + ", targets are " +
                         std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
  if (predictions.size() == 0) throw LengthMismatch("mse_loss of an empty sequence");
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

}  // namespace rollnet
