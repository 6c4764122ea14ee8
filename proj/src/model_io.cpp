#include "rollnet/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "rollnet/errors.hpp"

namespace rollnet {
namespace {

constexpr char kMagic[4] = {'C', 'H', 'L', 'F'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 3 * 4 + 8 + 8 + 8;

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, bytes.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(
      crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::vector<std::uint8_t> encode_model(const NetworkParams& params) {
  const NetworkConfig& cfg = params.config();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(kHeaderBytes + 8 * params.size() + 4);
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.num_inputs));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.num_blocks));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.num_outputs));
  put<std::uint64_t>(out, cfg.rng_seed);
  put<double>(out, cfg.init_scale);
  put<std::uint64_t>(out, params.size());
  for (double v : params.values()) put<double>(out, v);
  put<std::uint32_t>(out, crc32_of(out));
  return out;
}

NetworkParams decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw ChecksumMismatch("model file truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw VersionMismatch("not a model file (bad magic)");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kModelFormatVersion)
    throw VersionMismatch("model format version " + std::to_string(version) +
                          ", expected " + std::to_string(kModelFormatVersion));
  if (bytes.size() < kHeaderBytes + 4) throw ChecksumMismatch("model file truncated");

  NetworkConfig cfg;
  cfg.num_inputs = static_cast<int>(get<std::uint32_t>(bytes, pos));
  cfg.num_blocks = static_cast<int>(get<std::uint32_t>(bytes, pos));
  cfg.num_outputs = static_cast<int>(get<std::uint32_t>(bytes, pos));
  cfg.rng_seed = get<std::uint64_t>(bytes, pos);
  cfg.init_scale = get<double>(bytes, pos);
  const auto count = get<std::uint64_t>(bytes, pos);

  const std::uint64_t payload = bytes.size() - kHeaderBytes - 4;
  if (payload % 8 != 0 || payload / 8 != count)
    throw ChecksumMismatch("parameter count does not match payload length");
  const std::size_t body_end = bytes.size() - 4;
  std::size_t crc_pos = body_end;
  if (get<std::uint32_t>(bytes, crc_pos) != crc32_of(bytes.first(body_end)))
    throw ChecksumMismatch("model checksum mismatch");

  if (cfg.num_inputs < 1 || cfg.num_blocks < 1 || cfg.num_outputs < 1 ||
      cfg.parameter_count() != count)
    throw ChecksumMismatch("header shape disagrees with parameter count");

  NetworkParams params(cfg);
  for (double& v : params.values()) v = get<double>(bytes, pos);
  return params;
}

void save_model(const std::filesystem::path& path, const NetworkParams& params) {
  const auto bytes = encode_model(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

NetworkParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return decode_model(bytes);
}

}  // namespace rollnet
