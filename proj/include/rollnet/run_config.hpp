#ifndef ROLLNET_RUN_CONFIG_HPP
#define ROLLNET_RUN_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "rollnet/metrics.hpp"
#include "rollnet/network.hpp"
#include "rollnet/pianoroll.hpp"
#include "rollnet/runner.hpp"

namespace rollnet {

/// Settings for the random instance built by `gradcheck`.
struct GradcheckConfig {
  int num_inputs = 3;
  int num_blocks = 3;
  int num_outputs = 3;
  int sequence_length = 6;
  double init_scale = 0.5;
  double h = 1e-5;
  double tolerance = 1e-6;
};

struct RunConfig {
  GridConfig grid;
  NetworkConfig network;  // num_inputs/num_outputs follow grid.num_pitches
  OptimizerConfig optimizer;
  TrainConfig train;
  GenerationConfig generation;
  GradcheckConfig gradcheck;

  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown or repeated keys
/// are errors, absent keys keep their defaults.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its current value, in the format parse_run_config reads.
std::string to_config_text(const RunConfig& config);

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

}  // namespace rollnet

#endif  // ROLLNET_RUN_CONFIG_HPP
