#ifndef ROLLNET_MODEL_IO_HPP
#define ROLLNET_MODEL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rollnet/network.hpp"

namespace rollnet {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary model layout, all little-endian:
///
///   "CHLF"                      4 bytes
///   format version              u32
///   num_inputs, num_blocks,
///   num_outputs                 u32 each
///   rng_seed                    u64
///   init_scale                  f64
///   parameter count             u64
///   parameters                  f64 each, in NetworkParams storage order
///   CRC-32 of all bytes above   u32
std::vector<std::uint8_t> encode_model(const NetworkParams& params);

/// Throws VersionMismatch on a foreign magic or version and ChecksumMismatch
/// on truncation, a count/length disagreement or a bad checksum.
NetworkParams decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_model(const std::filesystem::path& path);

}  // namespace rollnet

#endif  // ROLLNET_MODEL_IO_HPP
