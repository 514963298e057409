#include <doctest.h>

#include <random>

#include "scenesim/errors.hpp"
#include "scenesim/io.hpp"
#include "test_util.hpp"

using namespace scenesim;

TEST_CASE("sha256 known vectors") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("base64 known vectors and round trip") {
  CHECK(io::base64_encode("") == "");
  CHECK(io::base64_encode("f") == "Zg==");
  CHECK(io::base64_encode("fo") == "Zm8=");
  CHECK(io::base64_encode("foo") == "Zm9v");
  CHECK(io::base64_encode("foobar") == "Zm9vYmFy");
  CHECK(io::base64_decode("Zm9vYmE=") == "fooba");
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 300);
  for (int k = 0; k < 500; ++k) {
    std::string s(static_cast<std::size_t>(len(gen)), '\0');
    for (auto& c : s) c = static_cast<char>(byte(gen));
    CHECK(io::base64_decode(io::base64_encode(s)) == s);
  }
  CHECK_THROWS_AS(io::base64_decode("Zm9v!"), Error);
}

TEST_CASE("PGM binary and ASCII parsing") {
  const auto bin = io::parse_pgm(io::encode_pgm(2, 2, 4, {0, 1, 3, 4}));
  CHECK(bin.width == 2);
  CHECK(bin.maxval == 4);
  CHECK(bin.pixels == std::vector<std::uint16_t>{0, 1, 3, 4});
  const auto ascii = io::parse_pgm("P2\n# comment\n3 1\n10\n0 5 10\n");
  CHECK(ascii.width == 3);
  CHECK(ascii.pixels[2] == 10);
  CHECK_THROWS_AS(io::parse_pgm("P6\n1 1\n255\n\0\0\0"), Error);
  CHECK_THROWS_AS(io::parse_pgm("P5\n4 4\n255\n\x01"), Error);
  CHECK_THROWS_AS(io::parse_pgm("P2\n1 1\n3\n9\n"), Error);
}

TEST_CASE("file helpers") {
  const auto dir = scenesim::test::scratch_dir("io");
  io::write_file(dir / "sub" / "x.txt", "hello");
  CHECK(io::read_file(dir / "sub" / "x.txt") == "hello");
  try {
    io::read_file(dir / "missing");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}
