#include "rollnet/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>

#include <CLI11.hpp>

#include "rollnet/errors.hpp"
#include "rollnet/metrics.hpp"
#include "rollnet/model_io.hpp"
#include "rollnet/pianoroll.hpp"
#include "rollnet/runner.hpp"

namespace rollnet::cli {
namespace fs = std::filesystem;
namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const std::string& w : warnings) err << "warning: skipped " << w << "\n";
}

void require_model_matches(const NetworkParams& params, const RunConfig& config) {
  const NetworkConfig& net = params.config();
  if (net.num_inputs != config.grid.num_pitches || net.num_outputs != config.grid.num_pitches)
    throw InvalidConfig("model has " + std::to_string(net.num_inputs) + " inputs and " +
                        std::to_string(net.num_outputs) + " outputs but the grid has " +
                        std::to_string(config.grid.num_pitches) + " pitches");
}

/// Maps library errors onto exit codes.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const NonFiniteLoss& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonFinite;
  } catch (const ChecksumMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitCorruptModel;
  } catch (const VersionMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitCorruptModel;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

RunConfig resolve_config(const Overrides& overrides) {
  RunConfig config = overrides.config ? load_run_config(*overrides.config) : RunConfig{};
  if (overrides.seed) config.network.rng_seed = *overrides.seed;
  if (overrides.optimizer) config.optimizer.kind = *overrides.optimizer;
  if (overrides.threshold) config.generation.threshold = *overrides.threshold;
  if (overrides.steps) config.generation.num_steps = *overrides.steps;
  config.network.num_inputs = config.network.num_outputs = config.grid.num_pitches;
  config.validate();
  return config;
}

fs::path resolve_corpus(const std::optional<fs::path>& corpus) {
  if (corpus) return *corpus;
  if (const char* env = std::getenv(kCorpusEnv); env && *env) return env;
  throw InvalidConfig(std::string("no corpus directory given and ") + kCorpusEnv + " is not set");
}

int cmd_train(const Overrides& overrides, const std::optional<fs::path>& corpus_dir,
              const fs::path& model, const std::optional<fs::path>& history, Streams io) {
  return guarded(io.err, [&] {
    const RunConfig config = resolve_config(overrides);
    const Corpus corpus = load_corpus(resolve_corpus(corpus_dir), config.grid);
    report_warnings(corpus.warnings, io.err);

    TrainResult result = train(corpus.train, config.network, config.optimizer, config.train,
                               config.train.log_every > 0 ? &io.out : nullptr);
    save_model(model, result.params);
    const fs::path history_path = history.value_or(fs::path(model.string() + ".history"));
    std::ofstream hist(history_path, std::ios::trunc);
    if (!hist) throw Error("cannot write " + history_path.string());
    write_history(hist, result.history);

    char line[160];
    std::snprintf(line, sizeof line, "trained %zu piece(s) with %s: epochs %d, final mse %.6f%s\n",
                  corpus.train.size(), std::string(optimizer_name(config.optimizer.kind)).c_str(),
                  result.history.epochs_run, result.history.final_mse(),
                  result.history.converged ? " (converged)" : "");
    io.out << line;
    return kExitOk;
  });
}

int cmd_generate(const Overrides& overrides, const fs::path& model, const fs::path& seed_midi,
                 const fs::path& output, Streams io) {
  return guarded(io.err, [&] {
    const RunConfig config = resolve_config(overrides);
    const NetworkParams params = load_model(model);
    require_model_matches(params, config);
    const MidiScore score = read_midi_file(seed_midi);
    const QuantizationSpec spec = QuantizationSpec::for_file(score.ticks_per_quarter, config.grid);
    const PianoRoll seed = quantize(score, spec);

    GenerationConfig gen = config.generation;
    gen.seed_frames = static_cast<int>(seed.steps());
    const PianoRoll out = generate(params, seed.frames, gen);
    write_midi_file(output, render_midi(out, spec));
    io.out << "wrote " << output.string() << ": " << seed.steps() << " seed + "
           << gen.num_steps << " generated frames\n";
    return kExitOk;
  });
}

int cmd_evaluate(const Overrides& overrides, const fs::path& model,
                 const std::optional<fs::path>& corpus_dir, Streams io) {
  return guarded(io.err, [&] {
    const RunConfig config = resolve_config(overrides);
    const NetworkParams params = load_model(model);
    require_model_matches(params, config);
    std::vector<std::string> warnings;
    const std::vector<PianoRoll> test =
        load_rolls(resolve_corpus(corpus_dir) / "test", config.grid, warnings);
    report_warnings(warnings, io.err);
    if (test.empty()) {
      io.err << "error: test split is empty\n";
      return kExitUsage;
    }
    const EvalReport report = evaluate(params, test, {config.generation.threshold});
    const std::pair<std::string, EvalReport> rows[] = {{model.stem().string(), report}};
    write_report_table(io.out, rows);
    io.out << "\n";
    write_piece_breakdown(io.out, report);
    io.out << "\nAcc=" << percent(report.frame_accuracy) << " F1=" << percent(report.macro_f1)
           << "\n";
    return kExitOk;
  });
}

int cmd_reconstruct(const Overrides& overrides, const fs::path& model, const fs::path& midi,
                    const std::optional<fs::path>& output, Streams io) {
  return guarded(io.err, [&] {
    const RunConfig config = resolve_config(overrides);
    const NetworkParams params = load_model(model);
    require_model_matches(params, config);
    const MidiScore score = read_midi_file(midi);
    const QuantizationSpec spec = QuantizationSpec::for_file(score.ticks_per_quarter, config.grid);
    PianoRoll original = quantize(score, spec);
    original.source_id = midi.filename().string();

    const Reconstruction rec = reconstruct(params, original, config.generation);
    if (output) write_midi_file(*output, render_midi(rec.roll, spec));
    char line[128];
    std::snprintf(line, sizeof line, "%s: %ld frames, frame accuracy %s\n",
                  original.source_id.c_str(), static_cast<long>(original.steps()),
                  percent(rec.frame_accuracy).c_str());
    io.out << line;
    return kExitOk;
  });
}

int cmd_gradcheck(const Overrides& overrides, Streams io, const GradientTamper& tamper) {
  return guarded(io.err, [&] {
    const RunConfig config = resolve_config(overrides);
    const GradcheckConfig& gc = config.gradcheck;

    NetworkConfig net;
    net.num_inputs = gc.num_inputs;
    net.num_blocks = gc.num_blocks;
    net.num_outputs = gc.num_outputs;
    net.rng_seed = config.network.rng_seed;
    net.init_scale = gc.init_scale;
    NetworkParams params = init_params(net);

    // Perturb the biases too so no parameter group sits at a special value.
    std::mt19937_64 gen(config.network.rng_seed ^ 0x9E3779B97F4A7C15ULL);
    auto unit = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    for (int g = 0; g < kGateCount; ++g)
      for (double& b : params.bias(static_cast<Gate>(g))) b += gc.init_scale * (2 * unit() - 1);
    for (double& b : params.output_bias()) b += gc.init_scale * (2 * unit() - 1);

    Frames inputs(gc.sequence_length, gc.num_inputs);
    Frames targets(gc.sequence_length, gc.num_outputs);
    for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = unit();
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = unit() < 0.5 ? 0.0 : 1.0;

    GradientSet analytic = backward(params, forward_sequence(params, inputs), targets);
    if (tamper) tamper(analytic);
    const GradientSet numeric = finite_diff_gradient(params, inputs, targets, gc.h);
    const GradientComparison cmp = compare_gradients(analytic, numeric);

    char line[256];
    std::snprintf(line, sizeof line,
                  "gradcheck: %zu parameters, max relative error %.3e at %s "
                  "(analytic %.10e, numeric %.10e)\n",
                  params.size(), cmp.max_relative_error,
                  parameter_name(net, cmp.worst_index).c_str(), cmp.analytic, cmp.numeric);
    io.out << line;
    if (cmp.max_relative_error < gc.tolerance) {
      io.out << "gradcheck: PASS (tolerance " << gc.tolerance << ")\n";
      return kExitOk;
    }
    io.out << "gradcheck: FAIL (tolerance " << gc.tolerance << ")\n";
    return kExitGradcheck;
  });
}

int run(int argc, const char* const* argv, Streams io, const GradientTamper& tamper) {
  CLI::App app{"Train an LSTM on piano rolls with RProp, generate and evaluate music."};
  app.require_subcommand(1);

  Overrides overrides;
  std::string optimizer;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", overrides.config, "key=value run configuration file");
    cmd->add_option("--seed", overrides.seed, "RNG seed for weight initialization");
    cmd->add_option("--optimizer", optimizer, "rprop or gd")
        ->check(CLI::IsMember({"rprop", "gd"}));
    cmd->add_option("--threshold", overrides.threshold, "note-on decision threshold");
    cmd->add_option("--steps", overrides.steps, "frames to generate");
  };

  std::optional<fs::path> corpus, history, output;
  fs::path model, input;

  auto* train_cmd = app.add_subcommand("train", "train a model on <corpus>/train");
  add_common(train_cmd);
  train_cmd->add_option("--corpus", corpus, std::string("corpus root (default $") + kCorpusEnv + ")");
  train_cmd->add_option("--model,-o", model, "output model file")->required();
  train_cmd->add_option("--history", history, "epoch/MSE table (default <model>.history)");

  auto* gen_cmd = app.add_subcommand("generate", "continue a seed MIDI file");
  add_common(gen_cmd);
  gen_cmd->add_option("--model,-m", model, "model file")->required();
  gen_cmd->add_option("--seed-midi,-i", input, "seed MIDI file")->required();
  gen_cmd->add_option("--output,-o", output, "output MIDI file")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "score a model on <corpus>/test");
  add_common(eval_cmd);
  eval_cmd->add_option("--model,-m", model, "model file")->required();
  eval_cmd->add_option("--corpus", corpus, std::string("corpus root (default $") + kCorpusEnv + ")");

  auto* rec_cmd = app.add_subcommand("reconstruct", "recreate a piece from its first frame");
  add_common(rec_cmd);
  rec_cmd->add_option("--model,-m", model, "model file")->required();
  rec_cmd->add_option("--midi,-i", input, "original MIDI file")->required();
  rec_cmd->add_option("--output,-o", output, "write the reconstruction as MIDI");

  auto* grad_cmd = app.add_subcommand("gradcheck", "compare BPTT against finite differences");
  add_common(grad_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!optimizer.empty()) overrides.optimizer = parse_optimizer(optimizer);

  if (train_cmd->parsed()) return cmd_train(overrides, corpus, model, history, io);
  if (gen_cmd->parsed()) return cmd_generate(overrides, model, input, *output, io);
  if (eval_cmd->parsed()) return cmd_evaluate(overrides, model, corpus, io);
  if (rec_cmd->parsed()) return cmd_reconstruct(overrides, model, input, output, io);
  return cmd_gradcheck(overrides, io, tamper);
}

}  // namespace rollnet::cli
