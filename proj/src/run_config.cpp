#include "rollnet/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rollnet/errors.hpp"

namespace rollnet {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw InvalidConfig("invalid value '" + std::string(value) + "' for key '" +
                      std::string(key) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  Setter set;
  Getter get;
};

template <class T, class Member>
Key numeric(Member member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_number<T>(k, v);
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(std::invoke(member, c));
            else
              return std::to_string(std::invoke(member, c));
          }};
}

const std::map<std::string, Key, std::less<>>& keys() {
  static const std::map<std::string, Key, std::less<>> table = [] {
    std::map<std::string, Key, std::less<>> k;
    // quantization
    k["step_note_value"] = numeric<int>([](auto& c) -> auto& { return c.grid.step_note_value; });
    k["min_pitch"] = numeric<int>([](auto& c) -> auto& { return c.grid.min_pitch; });
    k["num_pitches"] = numeric<int>([](auto& c) -> auto& { return c.grid.num_pitches; });
    // network
    k["num_blocks"] = numeric<int>([](auto& c) -> auto& { return c.network.num_blocks; });
    k["init_scale"] = numeric<double>([](auto& c) -> auto& { return c.network.init_scale; });
    k["seed"] = numeric<std::uint64_t>([](auto& c) -> auto& { return c.network.rng_seed; });
    // optimizer
    k["optimizer"] = {[](RunConfig& c, std::string_view, std::string_view v) {
                        c.optimizer.kind = parse_optimizer(v);
                      },
                      [](const RunConfig& c) { return std::string(optimizer_name(c.optimizer.kind)); }};
    k["rprop.delta_zero"] = numeric<double>([](auto& c) -> auto& { return c.optimizer.rprop.delta_zero; });
    k["rprop.delta_min"] = numeric<double>([](auto& c) -> auto& { return c.optimizer.rprop.delta_min; });
    k["rprop.delta_max"] = numeric<double>([](auto& c) -> auto& { return c.optimizer.rprop.delta_max; });
    k["rprop.eta_plus"] = numeric<double>([](auto& c) -> auto& { return c.optimizer.rprop.eta_plus; });
    k["rprop.eta_minus"] = numeric<double>([](auto& c) -> auto& { return c.optimizer.rprop.eta_minus; });
    k["rprop.variant"] = {[](RunConfig& c, std::string_view key, std::string_view v) {
                            if (v == "plain")
                              c.optimizer.rprop.variant = RPropVariant::plain;
                            else if (v == "with_backtracking")
                              c.optimizer.rprop.variant = RPropVariant::with_backtracking;
                            else
                              bad_value(key, v);
                          },
                          [](const RunConfig& c) {
                            return std::string(c.optimizer.rprop.variant == RPropVariant::plain
                                                   ? "plain"
                                                   : "with_backtracking");
                          }};
    k["gd.learning_rate"] = numeric<double>([](auto& c) -> auto& { return c.optimizer.gd.learning_rate; });
    // training
    k["max_epochs"] = numeric<int>([](auto& c) -> auto& { return c.train.max_epochs; });
    k["target_mse"] = numeric<double>([](auto& c) -> auto& { return c.train.target_mse; });
    k["truncation_window"] = {[](RunConfig& c, std::string_view key, std::string_view v) {
                                const int w = parse_number<int>(key, v);
                                if (w < 0) bad_value(key, v);
                                c.train.truncation_window =
                                    w == 0 ? std::nullopt : std::optional<int>(w);
                              },
                              [](const RunConfig& c) {
                                return std::to_string(c.train.truncation_window.value_or(0));
                              }};
    k["log_every"] = numeric<int>([](auto& c) -> auto& { return c.train.log_every; });
    k["loss_scale"] = numeric<double>([](auto& c) -> auto& { return c.train.loss_scale; });
    // generation
    k["threshold"] = numeric<double>([](auto& c) -> auto& { return c.generation.threshold; });
    k["steps"] = numeric<int>([](auto& c) -> auto& { return c.generation.num_steps; });
    k["seed_frames"] = numeric<int>([](auto& c) -> auto& { return c.generation.seed_frames; });
    k["feedback"] = {[](RunConfig& c, std::string_view key, std::string_view v) {
                       if (v == "binary")
                         c.generation.feedback = Feedback::binary;
                       else if (v == "raw")
                         c.generation.feedback = Feedback::raw;
                       else
                         bad_value(key, v);
                     },
                     [](const RunConfig& c) {
                       return std::string(c.generation.feedback == Feedback::binary ? "binary" : "raw");
                     }};
    k["fallback"] = {[](RunConfig& c, std::string_view key, std::string_view v) {
                       if (v == "silence")
                         c.generation.fallback.kind = Fallback::Kind::silence;
                       else if (v == "top_k")
                         c.generation.fallback.kind = Fallback::Kind::top_k;
                       else
                         bad_value(key, v);
                     },
                     [](const RunConfig& c) {
                       return std::string(c.generation.fallback.kind == Fallback::Kind::silence
                                              ? "silence"
                                              : "top_k");
                     }};
    k["fallback_k"] = numeric<int>([](auto& c) -> auto& { return c.generation.fallback.k; });
    // gradient check
    k["gradcheck.inputs"] = numeric<int>([](auto& c) -> auto& { return c.gradcheck.num_inputs; });
    k["gradcheck.blocks"] = numeric<int>([](auto& c) -> auto& { return c.gradcheck.num_blocks; });
    k["gradcheck.outputs"] = numeric<int>([](auto& c) -> auto& { return c.gradcheck.num_outputs; });
    k["gradcheck.length"] = numeric<int>([](auto& c) -> auto& { return c.gradcheck.sequence_length; });
    k["gradcheck.init_scale"] = numeric<double>([](auto& c) -> auto& { return c.gradcheck.init_scale; });
    k["gradcheck.h"] = numeric<double>([](auto& c) -> auto& { return c.gradcheck.h; });
    k["gradcheck.tolerance"] = numeric<double>([](auto& c) -> auto& { return c.gradcheck.tolerance; });
    return k;
  }();
  return table;
}

}  // namespace

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::rprop ? "rprop" : "gd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "rprop") return OptimizerKind::rprop;
  if (name == "gd") return OptimizerKind::gd;
  throw InvalidConfig("unknown optimizer '" + std::string(name) + "' (expected rprop or gd)");
}

void RunConfig::validate() const {
  QuantizationSpec::for_file(480, grid);
  NetworkConfig net = network;
  net.num_inputs = net.num_outputs = grid.num_pitches;
  net.validate();
  if (optimizer.kind == OptimizerKind::rprop)
    optimizer.rprop.validate();
  else
    optimizer.gd.validate();
  train.validate();
  generation.validate();
  if (gradcheck.num_inputs < 1 || gradcheck.num_blocks < 1 || gradcheck.num_outputs < 1 ||
      gradcheck.sequence_length < 1)
    throw InvalidConfig("gradcheck sizes must be >= 1");
  if (!(gradcheck.h > 0.0) || !(gradcheck.tolerance > 0.0))
    throw InvalidConfig("gradcheck.h and gradcheck.tolerance must be > 0");
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidConfig("line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = keys().find(key);
    if (it == keys().end())
      throw InvalidConfig("line " + std::to_string(line_no) + ": unknown key '" +
                          std::string(key) + "'");
    if (!seen.insert(std::string(key)).second)
      throw InvalidConfig("line " + std::to_string(line_no) + ": key '" + std::string(key) +
                          "' given twice");
    it->second.set(config, key, value);
  }
  config.network.num_inputs = config.network.num_outputs = config.grid.num_pitches;
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [name, key] : keys()) out += name + " = " + key.get(config) + "\n";
  return out;
}

}  // namespace rollnet
