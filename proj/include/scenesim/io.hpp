#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scenesim::io {

struct GrayImage {
  int width{0};
  int height{0};
  int maxval{255};
  std::vector<std::uint16_t> pixels;  // row-major
};

// Reads P2 (ASCII) or P5 (binary) PGM. Throws Error(kParse / kIo).
GrayImage parse_pgm(std::string_view bytes);
GrayImage read_pgm(const std::filesystem::path& path);

// Binary P5 with the given maxval (<= 255).
std::string encode_pgm(int width, int height, int maxval, const std::vector<std::uint8_t>& pixels);
void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

std::string sha256_hex(std::string_view data);

}  // namespace scenesim::io
