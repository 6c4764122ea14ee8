#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "rollnet/model_io.hpp"
#include "test_util.hpp"

using namespace rollnet;

namespace {

NetworkParams sample(std::uint64_t seed) {
  NetworkConfig c;
  c.num_inputs = 5;
  c.num_blocks = 3;
  c.num_outputs = 4;
  c.rng_seed = seed;
  c.init_scale = 0.25;
  std::mt19937_64 gen(seed);
  return test_util::random_params(gen, c, 10.0);
}

bool bit_equal(const NetworkParams& a, const NetworkParams& b) {
  return a.size() == b.size() &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return std::uint32_t(b[at]) | std::uint32_t(b[at + 1]) << 8 | std::uint32_t(b[at + 2]) << 16 |
         std::uint32_t(b[at + 3]) << 24;
}

}  // namespace

TEST_CASE("encode layout") {
  const NetworkParams p = sample(3);
  const std::vector<std::uint8_t> bytes = encode_model(p);
  REQUIRE(bytes.size() == 4 + 4 + 12 + 8 + 8 + 8 + 8 * p.size() + 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CHLF");
  CHECK(read_u32(bytes, 4) == kModelFormatVersion);
  CHECK(read_u32(bytes, 8) == 5);
  CHECK(read_u32(bytes, 12) == 3);
  CHECK(read_u32(bytes, 16) == 4);
  double first;
  std::memcpy(&first, bytes.data() + 44, 8);
  CHECK(first == p[0]);
}

TEST_CASE("round trip is bit-exact") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    NetworkParams p = sample(seed);
    p[0] = -0.0;
    p[1] = std::numeric_limits<double>::denorm_min();
    p[2] = std::nextafter(1.0, 2.0);
    p[3] = 1e308;
    const NetworkParams back = decode_model(encode_model(p));
    CHECK(bit_equal(back, p));
    CHECK(back.config().rng_seed == seed);
    CHECK(back.config().init_scale == 0.25);
    CHECK(std::signbit(back[0]));
  }
  test_util::TempDir dir("model");
  const NetworkParams p = init_params(NetworkConfig{});
  save_model(dir.path() / "m.bin", p);
  CHECK(bit_equal(load_model(dir.path() / "m.bin"), p));
  CHECK(encode_model(p) == encode_model(load_model(dir.path() / "m.bin")));
}

TEST_CASE("corruption is detected") {
  const std::vector<std::uint8_t> good = encode_model(sample(4));

  SUBCASE("wrong magic") {
    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_model(bad), VersionMismatch);
  }
  SUBCASE("future version") {
    auto bad = good;
    bad[4] = 2;
    CHECK_THROWS_AS(decode_model(bad), VersionMismatch);
  }
  SUBCASE("truncation at every length") {
    for (std::size_t n = 0; n < good.size(); n += (n < 64 ? 1 : 37)) {
      const std::span<const std::uint8_t> prefix(good.data(), n);
      CHECK_THROWS_AS(decode_model(prefix), Error);
      if (n >= 8) CHECK_THROWS_AS(decode_model(prefix), ChecksumMismatch);
    }
  }
  SUBCASE("any flipped payload byte") {
    for (std::size_t at = 8; at < good.size(); at += 7) {
      auto bad = good;
      bad[at] ^= 0x10;
      CHECK_THROWS_AS(decode_model(bad), ChecksumMismatch);
    }
  }
  SUBCASE("trailing garbage") {
    auto bad = good;
    bad.push_back(0);
    CHECK_THROWS_AS(decode_model(bad), ChecksumMismatch);
  }
  SUBCASE("files") {
    test_util::TempDir dir("model_bad");
    CHECK_THROWS_AS(load_model(dir.path() / "missing.bin"), Error);
    std::ofstream(dir.path() / "short.bin", std::ios::binary) << "CHLF";
    CHECK_THROWS_AS(load_model(dir.path() / "short.bin"), ChecksumMismatch);
  }
}
