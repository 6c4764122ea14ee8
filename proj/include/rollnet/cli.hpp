#ifndef ROLLNET_CLI_HPP
#define ROLLNET_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

#include "rollnet/bptt.hpp"
#include "rollnet/run_config.hpp"

namespace rollnet::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;        // bad arguments, config, unreadable input
inline constexpr int kExitNonFinite = 2;    // training diverged
inline constexpr int kExitCorruptModel = 3; // checksum or version mismatch
inline constexpr int kExitGradcheck = 4;    // gradient check failed

/// Environment variable naming the corpus root used when none is given.
inline constexpr const char* kCorpusEnv = "ROLLNET_CORPUS";

/// Flags shared by every subcommand; each overrides the config file.
struct Overrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<OptimizerKind> optimizer;
  std::optional<double> threshold;
  std::optional<int> steps;
};

RunConfig resolve_config(const Overrides& overrides);

/// Resolves an explicit corpus path or falls back to $ROLLNET_CORPUS.
std::filesystem::path resolve_corpus(const std::optional<std::filesystem::path>& corpus);

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// `history` defaults to "<model>.history".
int cmd_train(const Overrides& overrides, const std::optional<std::filesystem::path>& corpus,
              const std::filesystem::path& model,
              const std::optional<std::filesystem::path>& history, Streams io);

/// The whole seed file is fed before generating `steps` more frames.
int cmd_generate(const Overrides& overrides, const std::filesystem::path& model,
                 const std::filesystem::path& seed_midi, const std::filesystem::path& output,
                 Streams io);

int cmd_evaluate(const Overrides& overrides, const std::filesystem::path& model,
                 const std::optional<std::filesystem::path>& corpus, Streams io);

int cmd_reconstruct(const Overrides& overrides, const std::filesystem::path& model,
                    const std::filesystem::path& midi,
                    const std::optional<std::filesystem::path>& output, Streams io);

/// Hook applied to the analytic gradient before comparison; used to check
/// that a broken backward pass is caught.
using GradientTamper = std::function<void(GradientSet&)>;

int cmd_gradcheck(const Overrides& overrides, Streams io, const GradientTamper& tamper = {});

/// Parses argv with CLI11 and dispatches to the commands above.
int run(int argc, const char* const* argv, Streams io, const GradientTamper& tamper = {});

}  // namespace rollnet::cli

#endif  // ROLLNET_CLI_HPP
