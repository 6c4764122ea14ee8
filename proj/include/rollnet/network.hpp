#ifndef ROLLNET_NETWORK_HPP
#define ROLLNET_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rollnet/errors.hpp"
#include "rollnet/types.hpp"

namespace rollnet {

/// Gate order is also the storage order of the parameter vector.
enum class Gate : int { input = 0, forget = 1, output = 2, cell = 3 };
inline constexpr int kGateCount = 4;
const char* gate_name(Gate g);

struct NetworkConfig {
  int num_inputs = 88;
  int num_blocks = 64;
  int num_outputs = 88;
  std::uint64_t rng_seed = 0;
  double init_scale = 0.1;

  void validate() const;
  /// 4*B*(I + B + 1) + O*(B + 1)
  std::size_t parameter_count() const;

  bool same_shape(const NetworkConfig& other) const {
    return num_inputs == other.num_inputs && num_blocks == other.num_blocks &&
           num_outputs == other.num_outputs;
  }
};

/// Flat storage for one value per network parameter.
///
/// Layout: for each gate (input, forget, output, cell) the input weights
/// (B x I, row-major), the recurrent weights (B x B) and the bias (B); then the
/// output weights (O x B) and the output bias (O). NetworkParams and
/// GradientSet share this layout but are distinct types.
template <class Tag>
class ParameterVector {
 public:
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  ParameterVector() = default;
  explicit ParameterVector(const NetworkConfig& config)
      : config_(config), values_(config.parameter_count(), 0.0) {}

  const NetworkConfig& config() const { return config_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  MatrixMap input_weights(Gate g) {
    return {data() + gate_offset(g), config_.num_blocks, config_.num_inputs};
  }
  ConstMatrixMap input_weights(Gate g) const {
    return {data() + gate_offset(g), config_.num_blocks, config_.num_inputs};
  }
  MatrixMap recurrent_weights(Gate g) {
    return {data() + gate_offset(g) + input_size(), config_.num_blocks, config_.num_blocks};
  }
  ConstMatrixMap recurrent_weights(Gate g) const {
    return {data() + gate_offset(g) + input_size(), config_.num_blocks, config_.num_blocks};
  }
  VectorMap bias(Gate g) {
    return {data() + gate_offset(g) + input_size() + recurrent_size(), config_.num_blocks};
  }
  ConstVectorMap bias(Gate g) const {
    return {data() + gate_offset(g) + input_size() + recurrent_size(), config_.num_blocks};
  }
  MatrixMap output_weights() {
    return {data() + output_offset(), config_.num_outputs, config_.num_blocks};
  }
  ConstMatrixMap output_weights() const {
    return {data() + output_offset(), config_.num_outputs, config_.num_blocks};
  }
  VectorMap output_bias() {
    return {data() + output_offset() + output_weight_size(), config_.num_outputs};
  }
  ConstVectorMap output_bias() const {
    return {data() + output_offset() + output_weight_size(), config_.num_outputs};
  }

  template <class OtherTag>
  bool same_shape(const ParameterVector<OtherTag>& other) const {
    return config_.same_shape(other.config());
  }

  friend bool operator==(const ParameterVector& a, const ParameterVector& b) {
    return a.same_shape(b) && a.values_ == b.values_;
  }

 private:
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::size_t input_size() const {
    return std::size_t(config_.num_blocks) * config_.num_inputs;
  }
  std::size_t recurrent_size() const {
    return std::size_t(config_.num_blocks) * config_.num_blocks;
  }
  std::size_t gate_size() const { return input_size() + recurrent_size() + config_.num_blocks; }
  std::size_t gate_offset(Gate g) const { return std::size_t(g) * gate_size(); }
  std::size_t output_offset() const { return kGateCount * gate_size(); }
  std::size_t output_weight_size() const {
    return std::size_t(config_.num_outputs) * config_.num_blocks;
  }

  NetworkConfig config_;
  std::vector<double> values_;
};

struct ParamsTag {};
struct GradientTag {};
using NetworkParams = ParameterVector<ParamsTag>;

/// Human-readable identifier of flat parameter `index`, e.g. "forget.W[2,0]",
/// "cell.U[1,1]", "input.b[3]", "out.V[0,2]", "out.d[5]".
std::string parameter_name(const NetworkConfig& config, std::size_t index);

/// Uniform weights in [-init_scale, init_scale] from std::mt19937_64 seeded
/// with rng_seed. Each draw maps the top 53 bits of one generator output to
/// [0, 1), so the sequence is the same on every platform. Forget-gate biases
/// are 1.0 and all other biases 0.0.
NetworkParams init_params(const NetworkConfig& config);

struct StepState {
  Vector cell_states;
  Vector block_outputs;

  static StepState zeros(int num_blocks) {
    return {Vector::Zero(num_blocks), Vector::Zero(num_blocks)};
  }
};

/// Everything one forward step produced.
struct StepRecord {
  Vector input;
  Vector input_gate;
  Vector forget_gate;
  Vector output_gate;
  Vector cell_preactivation;
  Vector cell_candidate;  // tanh(cell_preactivation)
  Vector cell_state;
  Vector block_output;
  Vector output_preactivation;
  Vector prediction;

  StepState state() const { return {cell_state, block_output}; }
};

struct ForwardTrace {
  std::vector<StepRecord> steps;

  std::size_t size() const { return steps.size(); }
  /// Predictions stacked as rows.
  Frames predictions() const;
};

/// One forget-gate LSTM step without peepholes followed by the logistic
/// output layer.
StepRecord forward_step(const NetworkParams& params, const Eigen::Ref<const Vector>& x,
                        const StepState& prev);

/// Runs from the zero state over every row of `inputs`.
ForwardTrace forward_sequence(const NetworkParams& params, const Frames& inputs);

/// Mean of squared differences over all T * units entries.
double mse_loss(const Frames& predictions, const Frames& targets);

}  // namespace rollnet

#endif  // ROLLNET_NETWORK_HPP
