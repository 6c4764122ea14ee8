#include "rollnet/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rollnet/bptt.hpp"
#include "rollnet/errors.hpp"
#include "rollnet/metrics.hpp"

namespace rollnet {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw InvalidConfig("max_epochs must be >= 1");
  if (!(target_mse > 0.0 && target_mse < 1.0))
    throw InvalidConfig("target_mse must be in (0, 1)");
  if (truncation_window && *truncation_window < 1)
    throw InvalidConfig("truncation_window must be >= 1");
  if (log_every < 0) throw InvalidConfig("log_every must be >= 0");
  if (!(loss_scale > 0.0) || !std::isfinite(loss_scale))
    throw InvalidConfig("loss_scale must be finite and > 0");
}

void GenerationConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidConfig("threshold must be in (0, 1)");
  if (num_steps < 0) throw InvalidConfig("num_steps must be >= 0");
  if (seed_frames < 1) throw InvalidConfig("seed_frames must be >= 1");
  if (fallback.kind == Fallback::Kind::top_k && fallback.k < 1)
    throw InvalidConfig("top_k fallback needs k >= 1");
}

std::optional<int> TrainHistory::first_epoch_at_or_below(double threshold) const {
  for (std::size_t e = 0; e < mse.size(); ++e)
    if (mse[e] <= threshold) return static_cast<int>(e + 1);
  return std::nullopt;
}

TrainResult train(std::span<const PianoRoll> corpus, const NetworkConfig& net_config,
                  const OptimizerConfig& optimizer, const TrainConfig& config,
                  std::ostream* log, const EpochObserver& observer) {
  return train_from(init_params(net_config), corpus, optimizer, config, log, observer);
}

TrainResult train_from(NetworkParams params, std::span<const PianoRoll> corpus,
                       const OptimizerConfig& optimizer, const TrainConfig& config,
                       std::ostream* log, const EpochObserver& observer) {
  config.validate();
  if (corpus.empty()) throw EmptyCorpus("training needs at least one sequence");

  std::vector<SupervisedSequence> sequences;
  sequences.reserve(corpus.size());
  std::size_t total_entries = 0;
  for (const PianoRoll& roll : corpus) {
    sequences.push_back(to_supervised(roll));
    const SupervisedSequence& seq = sequences.back();
    if (seq.inputs.cols() != params.config().num_inputs ||
        seq.targets.cols() != params.config().num_outputs)
      throw ShapeMismatch("roll '" + roll.source_id + "' has " +
                          std::to_string(seq.inputs.cols()) +
                          " columns, network does not match");
    total_entries += static_cast<std::size_t>(seq.targets.size());
  }

  RPropState rprop_state;
  if (optimizer.kind == OptimizerKind::rprop)
    rprop_state = rprop_init(params, optimizer.rprop);
  else
    optimizer.gd.validate();

  BackwardOptions backward_options;
  backward_options.truncation_window = config.truncation_window;
  backward_options.loss_scale = config.loss_scale;

  TrainHistory history;
  std::vector<GradientSet> grads;
  grads.reserve(sequences.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    grads.clear();
    double squared_error = 0.0;
    for (const SupervisedSequence& seq : sequences) {
      ForwardTrace trace;
      try {
        trace = forward_sequence(params, seq.inputs);
      } catch (const NonFiniteActivation& e) {
        throw NonFiniteLoss(std::string(e.what()) + " in epoch " + std::to_string(epoch), epoch);
      }
      squared_error += (trace.predictions() - seq.targets).squaredNorm();
      try {
        grads.push_back(backward(params, trace, seq.targets, backward_options));
      } catch (const NonFiniteGradient& e) {
        throw NonFiniteLoss(std::string(e.what()) + " in epoch " + std::to_string(epoch), epoch);
      }
    }
    const double mse = squared_error / static_cast<double>(total_entries);
    if (!std::isfinite(mse))
      throw NonFiniteLoss("non-finite training loss in epoch " + std::to_string(epoch), epoch);

    history.mse.push_back(mse);
    history.epochs_run = epoch;
    if (observer) observer(epoch, params, mse);
    if (log && config.log_every > 0 && (epoch % config.log_every == 0 || epoch == 1)) {
      char line[96];
      std::snprintf(line, sizeof line, "epoch %d mse %.6f\n", epoch, mse);
      *log << line << std::flush;
    }

    if (mse <= config.target_mse) {
      history.converged = true;
      history.epoch_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
      break;
    }

    const GradientSet total = accumulate(grads);
    if (optimizer.kind == OptimizerKind::rprop)
      rprop_step(params, total, rprop_state, optimizer.rprop);
    else
      gd_step(params, total, optimizer.gd);
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  }
  return {std::move(params), std::move(history)};
}

void write_history(std::ostream& out, const TrainHistory& history) {
  out << "# epoch mse\n";
  char line[64];
  for (std::size_t e = 0; e < history.mse.size(); ++e) {
    std::snprintf(line, sizeof line, "%zu %.17g\n", e + 1, history.mse[e]);
    out << line;
  }
}

Predictor::Predictor(const NetworkParams& params)
    : params_(&params), state_(StepState::zeros(params.config().num_blocks)) {}

const Vector& Predictor::feed(const Eigen::Ref<const Vector>& frame) {
  StepRecord rec = forward_step(*params_, frame, state_);
  state_ = {std::move(rec.cell_state), std::move(rec.block_output)};
  last_ = std::move(rec.prediction);
  return last_;
}

void Predictor::reset() {
  state_ = StepState::zeros(params_->config().num_blocks);
  last_.resize(0);
}

Vector predict_next(const NetworkParams& params, const Frames& history) {
  if (history.rows() < 1) throw LengthMismatch("predict_next needs a non-empty history");
  Predictor predictor(params);
  Vector out;
  for (Eigen::Index t = 0; t < history.rows(); ++t) {
    try {
      out = predictor.feed(history.row(t).transpose());
    } catch (const NonFiniteActivation& e) {
      throw NonFiniteActivation(std::string(e.what()) + " at timestep " + std::to_string(t), t);
    }
  }
  return out;
}

Vector threshold_frame(const Vector& probabilities, double threshold, const Fallback& fallback) {
  Vector frame = (probabilities.array() > threshold).cast<double>().matrix();
  if (fallback.kind == Fallback::Kind::top_k && frame.sum() == 0.0) {
    std::vector<Eigen::Index> order(probabilities.size());
    std::iota(order.begin(), order.end(), 0);
    const auto k = std::min<std::size_t>(fallback.k, order.size());
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return probabilities[a] > probabilities[b] ||
                               (probabilities[a] == probabilities[b] && a < b);
                      });
    for (std::size_t i = 0; i < k; ++i) frame[order[i]] = 1.0;
  }
  return frame;
}

PianoRoll generate(const NetworkParams& params, const Frames& seed,
                   const GenerationConfig& config) {
  config.validate();
  if (seed.rows() < config.seed_frames)
    throw TooShort("seed has " + std::to_string(seed.rows()) + " rows, seed_frames is " +
                   std::to_string(config.seed_frames));
  if (seed.cols() != params.config().num_inputs || seed.cols() != params.config().num_outputs)
    throw ShapeMismatch("seed width does not match the network");

  PianoRoll out;
  out.frames = Frames::Zero(config.seed_frames + config.num_steps, seed.cols());
  out.frames.topRows(config.seed_frames) = seed.topRows(config.seed_frames);
  if (config.num_steps == 0) return out;

  Predictor predictor(params);
  Vector probabilities;
  for (int t = 0; t < config.seed_frames; ++t) probabilities = predictor.feed(seed.row(t).transpose());
  for (int s = 0; s < config.num_steps; ++s) {
    const Vector frame = threshold_frame(probabilities, config.threshold, config.fallback);
    out.frames.row(config.seed_frames + s) = frame.transpose();
    if (s + 1 == config.num_steps) break;
    if (config.feedback == Feedback::binary)
      probabilities = predictor.feed(frame);
    else
      probabilities = predictor.feed(Vector(probabilities));
  }
  return out;
}

Reconstruction reconstruct(const NetworkParams& params, const PianoRoll& original,
                           GenerationConfig config) {
  if (original.steps() < 2) throw TooShort("reconstruction needs at least 2 frames");
  if (config.seed_frames > original.steps())
    throw TooShort("seed_frames exceeds the length of the original");
  config.num_steps = static_cast<int>(original.steps()) - config.seed_frames;
  Reconstruction out;
  out.roll = generate(params, original.frames, config);
  out.roll.step_note_value = original.step_note_value;
  out.roll.source_id = original.source_id;
  out.frame_accuracy = frame_accuracy(out.roll.frames, original.frames);
  return out;
}

}  // namespace rollnet
