#include "scenesim/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>

#include "scenesim/errors.hpp"

namespace scenesim::io {

namespace {

// Skips whitespace and '#' comments in a PGM header.
std::size_t skip_header_space(std::string_view bytes, std::size_t pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  return pos;
}

long read_header_int(std::string_view bytes, std::size_t& pos) {
  pos = skip_header_space(bytes, pos);
  const std::size_t start = pos;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw Error(ErrorCode::kParse, "PGM header: expected integer at byte " + std::to_string(start));
  return std::stol(std::string(bytes.substr(start, pos - start)));
}

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw Error(ErrorCode::kParse, "not a P2/P5 PGM image");
  }
  const bool binary = bytes[1] == '5';
  std::size_t pos = 2;
  GrayImage img;
  img.width = static_cast<int>(read_header_int(bytes, pos));
  img.height = static_cast<int>(read_header_int(bytes, pos));
  img.maxval = static_cast<int>(read_header_int(bytes, pos));
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535) {
    throw Error(ErrorCode::kParse, "PGM header has invalid dimensions or maxval");
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(n);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = img.maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + n * bpp) throw Error(ErrorCode::kParse, "PGM raster truncated");
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * bpp);
      img.pixels[i] = bpp == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const long v = read_header_int(bytes, pos);
      img.pixels[i] = static_cast<std::uint16_t>(v);
    }
  }
  for (auto v : img.pixels) {
    if (v > img.maxval) throw Error(ErrorCode::kParse, "PGM pixel exceeds maxval");
  }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

std::string encode_pgm(int width, int height, int maxval, const std::vector<std::uint8_t>& pixels) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                    std::to_string(maxval) + "\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string base64_encode(std::string_view data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8) |
                       static_cast<unsigned char>(data[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const unsigned v = static_cast<unsigned char>(data[i]) << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t i = 0; i < kAlphabet.size(); ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
  std::string out;
  unsigned acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const int v = lookup[static_cast<unsigned char>(ch)];
    if (v < 0) throw Error(ErrorCode::kParse, "invalid base64 character");
    acc = (acc << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xFF);
    }
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

}  // namespace scenesim::io
