#ifndef ROLLNET_PIANOROLL_HPP
#define ROLLNET_PIANOROLL_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rollnet/types.hpp"

namespace rollnet {

inline constexpr int kPianoLowestPitch = 21;  // A0
inline constexpr int kPianoKeys = 88;         // A0..C8

struct NoteEvent {
  int pitch = 0;
  std::int64_t onset_ticks = 0;
  std::int64_t duration_ticks = 1;
  int track = 0;

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

/// Notes of a Standard MIDI File merged across tracks.
struct MidiScore {
  int ticks_per_quarter = 480;
  std::vector<NoteEvent> events;  // sorted by (onset, pitch, track)
  std::int64_t end_ticks = 0;     // latest end-of-track position
};

/// Grid settings that do not depend on a particular file.
struct GridConfig {
  /// Note value of one step as a denominator: 8 is an eighth note.
  int step_note_value = 8;
  int min_pitch = kPianoLowestPitch;
  int num_pitches = kPianoKeys;
};

struct QuantizationSpec {
  int ticks_per_quarter = 480;
  int ticks_per_step = 240;
  int min_pitch = kPianoLowestPitch;
  int num_pitches = kPianoKeys;

  int max_pitch() const { return min_pitch + num_pitches - 1; }
  void validate() const;

  /// ticks_per_step = round(4 * ppq / step_note_value), at least 1.
  static QuantizationSpec for_file(int ticks_per_quarter,
                                   const GridConfig& grid = {});
};

/// Binary T x P matrix; column c is pitch min_pitch + c.
struct PianoRoll {
  Frames frames;
  /// Duration of one row as a fraction of a whole note, 1/step_note_value.
  int step_note_value = 8;
  std::string source_id;

  Eigen::Index steps() const { return frames.rows(); }
  Eigen::Index pitches() const { return frames.cols(); }

  /// Throws InvalidRoll unless every entry is 0.0 or 1.0 and T >= 1.
  void validate() const;

  friend bool operator==(const PianoRoll& a, const PianoRoll& b) {
    return a.frames.rows() == b.frames.rows() &&
           a.frames.cols() == b.frames.cols() && a.frames == b.frames;
  }
};

/// x(t) = frame t, y(t) = frame t + 1.
struct SupervisedSequence {
  Frames inputs;
  Frames targets;
};

MidiScore parse_midi(std::span<const std::uint8_t> bytes);
MidiScore read_midi_file(const std::filesystem::path& path);

/// Folds `pitch` by octaves into [spec.min_pitch, spec.max_pitch()].
int fold_into_range(int pitch, const QuantizationSpec& spec);

/// Places each note on the step grid. When `total_ticks` is positive the roll
/// is at least round(total_ticks / ticks_per_step) rows long, so trailing
/// silence written by render_midi survives a round trip.
PianoRoll quantize(std::span<const NoteEvent> events,
                   const QuantizationSpec& spec, std::int64_t total_ticks = 0);
PianoRoll quantize(const MidiScore& score, const QuantizationSpec& spec);

SupervisedSequence to_supervised(const PianoRoll& roll);

/// Format-0 SMF: 120 BPM, velocity 80, each run of ones in a column becomes
/// one sustained note. End of track is placed at T * ticks_per_step.
std::vector<std::uint8_t> render_midi(const PianoRoll& roll,
                                      const QuantizationSpec& spec);
void write_midi_file(const std::filesystem::path& path,
                     std::span<const std::uint8_t> bytes);

/// Reads and quantizes one MIDI file with a spec derived from its own PPQ.
PianoRoll load_roll(const std::filesystem::path& path, const GridConfig& grid);

/// Every .mid/.midi file directly inside `dir`, in lexicographic filename
/// order. Files that fail to load are skipped and described in `warnings`.
/// A missing directory yields no rolls.
std::vector<PianoRoll> load_rolls(const std::filesystem::path& dir, const GridConfig& grid,
                                  std::vector<std::string>& warnings);

struct Corpus {
  std::vector<PianoRoll> train;
  std::vector<PianoRoll> valid;
  std::vector<PianoRoll> test;
  std::vector<std::string> warnings;  // one entry per skipped file
};

/// Reads train/, valid/ and test/ beneath `directory`. Files are
/// taken in lexicographic filename order; unparseable files are skipped with
/// a warning. Throws EmptyCorpus if train/ yields no roll.
Corpus load_corpus(const std::filesystem::path& directory,
                   const GridConfig& grid = {});

// Text fixture format: "PIANOROLL v1 T=<rows> P=<cols>" then T lines of 0/1.
std::string to_roll_text(const PianoRoll& roll);
PianoRoll parse_roll_text(std::string_view text);

}  // namespace rollnet

#endif  // ROLLNET_PIANOROLL_HPP
