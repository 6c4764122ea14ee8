// Standard MIDI File reading and writing.

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <tuple>

#include "rollnet/errors.hpp"
#include "rollnet/pianoroll.hpp"

namespace rollnet {
namespace {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}

  bool done() const { return pos_ >= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t peek() const {
    require(1);
    return bytes_[pos_];
  }
  std::uint8_t u8() {
    require(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    require(2);
    std::uint16_t v = (bytes_[pos_] << 8) | bytes_[pos_ + 1];
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    require(4);
    std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) |
                      (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                      (std::uint32_t{bytes_[pos_ + 2]} << 8) |
                      std::uint32_t{bytes_[pos_ + 3]};
    pos_ += 4;
    return v;
  }
  /// Variable-length quantity: at most four bytes, 28 bits.
  std::uint32_t vlq() {
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      value = (value << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return value;
    }
    throw MalformedMidi(context_ + ": variable-length quantity exceeds 4 bytes");
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    require(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void skip(std::size_t n) { take(n); }

 private:
  void require(std::size_t n) const {
    if (remaining() < n) throw MalformedMidi(context_ + ": unexpected end of data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string context_;
};

struct OpenNote {
  std::int64_t onset;
};

std::int64_t parse_track(std::span<const std::uint8_t> data, int track,
                         std::vector<NoteEvent>& out) {
  ByteReader in(data, "track " + std::to_string(track));
  // (channel, pitch) -> note-ons awaiting their note-off, oldest first.
  std::map<std::pair<int, int>, std::deque<OpenNote>> open;
  std::int64_t tick = 0;
  std::uint8_t running_status = 0;

  auto close = [&](int channel, int pitch) {
    auto it = open.find({channel, pitch});
    if (it == open.end() || it->second.empty()) return;  // stray note-off
    const OpenNote note = it->second.front();
    it->second.pop_front();
    out.push_back({pitch, note.onset, std::max<std::int64_t>(1, tick - note.onset),
                   track});
  };

  bool ended = false;
  while (!in.done() && !ended) {
    tick += in.vlq();
    std::uint8_t status = in.peek();
    if (status & 0x80) {
      in.u8();
    } else {
      if (running_status == 0)
        throw MalformedMidi("track " + std::to_string(track) +
                            ": data byte without running status");
      status = running_status;
    }

    if (status == 0xFF) {
      running_status = 0;
      const std::uint8_t type = in.u8();
      const std::uint32_t len = in.vlq();
      in.skip(len);
      if (type == 0x2F) ended = true;
    } else if (status == 0xF0 || status == 0xF7) {
      running_status = 0;
      in.skip(in.vlq());
    } else if (status >= 0xF1) {
      throw MalformedMidi("track " + std::to_string(track) +
                          ": system message inside track");
    } else {
      running_status = status;
      const int kind = status & 0xF0;
      const int channel = status & 0x0F;
      if (kind == 0xC0 || kind == 0xD0) {
        in.u8();
        continue;
      }
      const std::uint8_t a = in.u8();
      const std::uint8_t b = in.u8();
      if ((a | b) & 0x80)
        throw MalformedMidi("track " + std::to_string(track) +
                            ": data byte with high bit set");
      if (kind == 0x90 && b > 0) {
        open[{channel, a}].push_back({tick});
      } else if (kind == 0x80 || kind == 0x90) {
        close(channel, a);
      }
    }
  }

  // Unmatched note-ons end with the track.
  for (auto& [key, notes] : open) {
    while (!notes.empty()) close(key.first, key.second);
  }
  return tick;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v >> 8);
  out.push_back(v & 0xFF);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back((v >> shift) & 0xFF);
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::array<std::uint8_t, 5> buf{};
  int n = 0;
  buf[n++] = v & 0x7F;
  while (v >>= 7) buf[n++] = 0x80 | (v & 0x7F);
  while (n > 0) out.push_back(buf[--n]);
}

}  // namespace

MidiScore parse_midi(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "header");
  if (in.remaining() < 14) throw MalformedMidi("file too short for an MThd chunk");
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd"))
    throw MalformedMidi("missing MThd header");
  const std::uint32_t header_len = in.u32();
  if (header_len < 6) throw MalformedMidi("MThd chunk shorter than 6 bytes");
  const std::uint16_t format = in.u16();
  const std::uint16_t ntracks = in.u16();
  const std::uint16_t division = in.u16();
  in.skip(header_len - 6);

  if (format == 2) throw UnsupportedFormat("format-2 MIDI files are not supported");
  if (format > 2) throw MalformedMidi("unknown SMF format " + std::to_string(format));
  if (division & 0x8000) throw UnsupportedFormat("SMPTE time division is not supported");
  if (division == 0) throw MalformedMidi("zero ticks per quarter note");

  MidiScore score;
  score.ticks_per_quarter = division;
  int track = 0;
  while (track < ntracks) {
    if (in.remaining() < 8) throw MalformedMidi("truncated chunk header");
    const auto id = in.take(4);
    const std::uint32_t len = in.u32();
    if (in.remaining() < len) throw MalformedMidi("truncated chunk body");
    const auto body = in.take(len);
    if (!std::equal(id.begin(), id.end(), "MTrk")) continue;  // alien chunk
    score.end_ticks = std::max(score.end_ticks, parse_track(body, track, score.events));
    ++track;
  }

  std::sort(score.events.begin(), score.events.end(),
            [](const NoteEvent& a, const NoteEvent& b) {
              return std::tie(a.onset_ticks, a.pitch, a.track, a.duration_ticks) <
                     std::tie(b.onset_ticks, b.pitch, b.track, b.duration_ticks);
            });
  return score;
}

MidiScore read_midi_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return parse_midi(bytes);
}

std::vector<std::uint8_t> render_midi(const PianoRoll& roll,
                                      const QuantizationSpec& spec) {
  spec.validate();
  roll.validate();
  if (roll.pitches() != spec.num_pitches)
    throw ShapeMismatch("roll has " + std::to_string(roll.pitches()) +
                        " columns, spec expects " + std::to_string(spec.num_pitches));

  constexpr std::uint8_t kVelocity = 80;
  constexpr std::uint32_t kTempoMicros = 500000;  // 120 BPM

  struct Message {
    std::int64_t tick;
    int order;  // note-offs sort before note-ons at the same tick
    std::uint8_t status;
    std::uint8_t pitch;
    std::uint8_t velocity;
  };
  std::vector<Message> messages;
  const Eigen::Index steps = roll.steps();
  for (Eigen::Index c = 0; c < roll.pitches(); ++c) {
    const auto pitch = static_cast<std::uint8_t>(spec.min_pitch + c);
    Eigen::Index t = 0;
    while (t < steps) {
      if (roll.frames(t, c) == 0.0) {
        ++t;
        continue;
      }
      const Eigen::Index start = t;
      while (t < steps && roll.frames(t, c) != 0.0) ++t;
      messages.push_back({start * spec.ticks_per_step, 1, 0x90, pitch, kVelocity});
      messages.push_back({t * spec.ticks_per_step, 0, 0x80, pitch, 0});
    }
  }
  std::sort(messages.begin(), messages.end(), [](const Message& a, const Message& b) {
    return std::tie(a.tick, a.order, a.pitch) < std::tie(b.tick, b.order, b.pitch);
  });

  std::vector<std::uint8_t> track;
  put_vlq(track, 0);
  track.insert(track.end(), {0xFF, 0x51, 0x03});
  track.push_back((kTempoMicros >> 16) & 0xFF);
  track.push_back((kTempoMicros >> 8) & 0xFF);
  track.push_back(kTempoMicros & 0xFF);

  std::int64_t now = 0;
  for (const Message& m : messages) {
    put_vlq(track, static_cast<std::uint32_t>(m.tick - now));
    now = m.tick;
    track.insert(track.end(), {m.status, m.pitch, m.velocity});
  }
  const std::int64_t end = steps * spec.ticks_per_step;
  put_vlq(track, static_cast<std::uint32_t>(end - now));
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(spec.ticks_per_quarter));
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

void write_midi_file(const std::filesystem::path& path,
                     std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace rollnet
