#ifndef ROLLNET_RUNNER_HPP
#define ROLLNET_RUNNER_HPP

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "rollnet/network.hpp"
#include "rollnet/optim.hpp"
#include "rollnet/pianoroll.hpp"

namespace rollnet {

enum class OptimizerKind { rprop, gd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rprop;
  RPropConfig rprop;
  GDConfig gd;
};

struct TrainConfig {
  int max_epochs = 500;
  double target_mse = 0.01;
  std::optional<int> truncation_window;
  /// Print "epoch <n> mse <e>" every this many epochs; 0 disables logging.
  int log_every = 0;
  /// Multiplies the training objective. RProp trajectories do not depend on it.
  double loss_scale = 1.0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> mse;            // total training MSE, one per epoch
  std::vector<double> epoch_seconds;  // wall time, one per epoch
  int epochs_run = 0;
  bool converged = false;

  double final_mse() const { return mse.empty() ? 0.0 : mse.back(); }
  /// First epoch (1-based) whose MSE is <= threshold, if any.
  std::optional<int> first_epoch_at_or_below(double threshold) const;
};

struct TrainResult {
  NetworkParams params;
  TrainHistory history;
};

/// Called after the forward/backward pass of each epoch with the parameters
/// that produced `mse` (before the update).
using EpochObserver = std::function<void(int epoch, const NetworkParams& params, double mse)>;

/// Full-batch teacher-forced training. Each epoch runs every roll, sums the
/// per-sequence gradients in corpus order and applies one optimizer step.
/// Training stops once the epoch MSE is <= target_mse; the returned
/// parameters are then exactly the ones that reached it.
TrainResult train(std::span<const PianoRoll> corpus, const NetworkConfig& net_config,
                  const OptimizerConfig& optimizer, const TrainConfig& config,
                  std::ostream* log = nullptr, const EpochObserver& observer = {});

/// Same, continuing from existing parameters.
TrainResult train_from(NetworkParams params, std::span<const PianoRoll> corpus,
                       const OptimizerConfig& optimizer, const TrainConfig& config,
                       std::ostream* log = nullptr, const EpochObserver& observer = {});

/// Two columns, "epoch mse", one line per epoch after a "# epoch mse" header.
void write_history(std::ostream& out, const TrainHistory& history);

enum class Feedback { binary, raw };

struct Fallback {
  enum class Kind { silence, top_k } kind = Kind::silence;
  int k = 1;
};

struct GenerationConfig {
  double threshold = 0.9;
  int num_steps = 1;
  int seed_frames = 1;
  Feedback feedback = Feedback::binary;
  Fallback fallback;

  void validate() const;
};

/// Stateful one-step-at-a-time evaluation of a network.
class Predictor {
 public:
  explicit Predictor(const NetworkParams& params);

  /// Feeds one frame and returns the prediction for the next one.
  const Vector& feed(const Eigen::Ref<const Vector>& frame);
  void reset();

 private:
  const NetworkParams* params_;
  StepState state_;
  Vector last_;
};

/// Final prediction after running `history` (rows) from the zero state.
Vector predict_next(const NetworkParams& params, const Frames& history);

/// Units strictly above threshold are on. An empty frame is filled according
/// to `fallback`.
Vector threshold_frame(const Vector& probabilities, double threshold,
                       const Fallback& fallback = {});

/// First `seed_frames` rows of `seed`, then `num_steps` frames predicted from
/// the model's own previous output.
PianoRoll generate(const NetworkParams& params, const Frames& seed,
                   const GenerationConfig& config);

struct Reconstruction {
  PianoRoll roll;
  double frame_accuracy = 0.0;
};

/// Free-running generation seeded with the beginning of `original`, scored
/// against it with frame-level accuracy.
Reconstruction reconstruct(const NetworkParams& params, const PianoRoll& original,
                           GenerationConfig config);

}  // namespace rollnet

#endif  // ROLLNET_RUNNER_HPP
