#include "rollnet/pianoroll.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rollnet/errors.hpp"

namespace rollnet {
namespace {

// Round-half-up division onto the grid.
std::int64_t nearest_step(std::int64_t ticks, std::int64_t ticks_per_step) {
  return (2 * ticks + ticks_per_step) / (2 * ticks_per_step);
}

bool has_midi_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".mid" || ext == ".midi";
}

}  // namespace

void QuantizationSpec::validate() const {
  if (ticks_per_quarter < 1 || ticks_per_quarter > 0x7FFF)
    throw InvalidConfig("ticks_per_quarter must be in [1, 32767]");
  if (ticks_per_step < 1) throw InvalidConfig("ticks_per_step must be >= 1");
  if (min_pitch < 0) throw InvalidConfig("min_pitch must be >= 0");
  // Octave folding needs at least one full octave of room.
  if (num_pitches < 12) throw InvalidConfig("num_pitches must be >= 12");
  if (max_pitch() > 127) throw InvalidConfig("min_pitch + num_pitches - 1 exceeds 127");
}

QuantizationSpec QuantizationSpec::for_file(int ticks_per_quarter,
                                            const GridConfig& grid) {
  if (grid.step_note_value < 1) throw InvalidConfig("step_note_value must be >= 1");
  QuantizationSpec spec;
  spec.ticks_per_quarter = ticks_per_quarter;
  const long long whole = 4LL * ticks_per_quarter;
  spec.ticks_per_step = static_cast<int>(
      std::max<long long>(1, (2 * whole + grid.step_note_value) / (2 * grid.step_note_value)));
  spec.min_pitch = grid.min_pitch;
  spec.num_pitches = grid.num_pitches;
  spec.validate();
  return spec;
}

void PianoRoll::validate() const {
  if (frames.rows() < 1) throw InvalidRoll("piano roll has no frames");
  if (frames.cols() < 1) throw InvalidRoll("piano roll has no pitch columns");
  for (Eigen::Index t = 0; t < frames.rows(); ++t)
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      const double v = frames(t, c);
      if (v != 0.0 && v != 1.0)
        throw InvalidRoll("piano roll entry (" + std::to_string(t) + ", " +
                          std::to_string(c) + ") is not binary");
    }
}

int fold_into_range(int pitch, const QuantizationSpec& spec) {
  if (pitch < spec.min_pitch) pitch += 12 * ((spec.min_pitch - pitch + 11) / 12);
  if (pitch > spec.max_pitch()) pitch -= 12 * ((pitch - spec.max_pitch() + 11) / 12);
  return pitch;
}

PianoRoll quantize(std::span<const NoteEvent> events, const QuantizationSpec& spec,
                   std::int64_t total_ticks) {
  spec.validate();
  struct Cell {
    std::int64_t start, end;
    int column;
  };
  std::vector<Cell> cells;
  cells.reserve(events.size());
  std::int64_t steps = total_ticks > 0 ? nearest_step(total_ticks, spec.ticks_per_step) : 0;
  for (const NoteEvent& e : events) {
    const std::int64_t start = nearest_step(e.onset_ticks, spec.ticks_per_step);
    std::int64_t end =
        nearest_step(e.onset_ticks + e.duration_ticks, spec.ticks_per_step);
    if (end <= start) end = start + 1;
    cells.push_back({start, end, fold_into_range(e.pitch, spec) - spec.min_pitch});
    steps = std::max(steps, end);
  }
  if (steps < 1) throw EmptyAfterQuantization("no time steps after quantization");

  PianoRoll roll;
  roll.frames = Frames::Zero(steps, spec.num_pitches);
  for (const Cell& cell : cells)
    for (std::int64_t t = cell.start; t < cell.end; ++t) roll.frames(t, cell.column) = 1.0;
  const long long whole = 4LL * spec.ticks_per_quarter;
  roll.step_note_value =
      static_cast<int>(std::max<long long>(1, whole / spec.ticks_per_step));
  return roll;
}

PianoRoll quantize(const MidiScore& score, const QuantizationSpec& spec) {
  return quantize(score.events, spec, score.end_ticks);
}

SupervisedSequence to_supervised(const PianoRoll& roll) {
  const Eigen::Index steps = roll.steps();
  if (steps < 2)
    throw TooShort("piano roll needs at least 2 frames, has " + std::to_string(steps));
  return {roll.frames.topRows(steps - 1), roll.frames.bottomRows(steps - 1)};
}

PianoRoll load_roll(const std::filesystem::path& path, const GridConfig& grid) {
  const MidiScore score = read_midi_file(path);
  PianoRoll roll = quantize(score, QuantizationSpec::for_file(score.ticks_per_quarter, grid));
  roll.source_id = path.filename().string();
  return roll;
}

std::vector<PianoRoll> load_rolls(const std::filesystem::path& dir, const GridConfig& grid,
                                  std::vector<std::string>& warnings) {
  namespace fs = std::filesystem;
  std::vector<PianoRoll> rolls;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return rolls;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_midi_extension(entry.path()))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  for (const fs::path& file : files) {
    try {
      rolls.push_back(load_roll(file, grid));
    } catch (const Error& e) {
      warnings.push_back(file.string() + ": " + e.what());
    }
  }
  return rolls;
}

Corpus load_corpus(const std::filesystem::path& directory, const GridConfig& grid) {
  Corpus corpus;
  corpus.train = load_rolls(directory / "train", grid, corpus.warnings);
  corpus.valid = load_rolls(directory / "valid", grid, corpus.warnings);
  corpus.test = load_rolls(directory / "test", grid, corpus.warnings);
  if (corpus.train.empty())
    throw EmptyCorpus("no readable MIDI files in " + (directory / "train").string());
  return corpus;
}

std::string to_roll_text(const PianoRoll& roll) {
  roll.validate();
  std::string out = "PIANOROLL v1 T=" + std::to_string(roll.steps()) +
                    " P=" + std::to_string(roll.pitches()) + "\n";
  out.reserve(out.size() + roll.steps() * (roll.pitches() + 1));
  for (Eigen::Index t = 0; t < roll.steps(); ++t) {
    for (Eigen::Index c = 0; c < roll.pitches(); ++c)
      out.push_back(roll.frames(t, c) != 0.0 ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

PianoRoll parse_roll_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw InvalidRoll("empty piano-roll text");
  long rows = 0, cols = 0;
  char tail = 0;
  if (std::sscanf(header.c_str(), "PIANOROLL v1 T=%ld P=%ld%c", &rows, &cols, &tail) != 2 ||
      rows < 1 || cols < 1)
    throw InvalidRoll("bad piano-roll header: " + header);

  PianoRoll roll;
  roll.frames = Frames::Zero(rows, cols);
  std::string line;
  for (long t = 0; t < rows; ++t) {
    if (!std::getline(in, line))
      throw InvalidRoll("piano-roll text ends at row " + std::to_string(t));
    if (static_cast<long>(line.size()) != cols)
      throw InvalidRoll("row " + std::to_string(t) + " has " + std::to_string(line.size()) +
                        " characters, expected " + std::to_string(cols));
    for (long c = 0; c < cols; ++c) {
      if (line[c] == '1')
        roll.frames(t, c) = 1.0;
      else if (line[c] != '0')
        throw InvalidRoll("row " + std::to_string(t) + " contains '" + line[c] + "'");
    }
  }
  while (std::getline(in, line))
    if (!line.empty()) throw InvalidRoll("trailing data after piano-roll rows");
  return roll;
}

}  // namespace rollnet
