#include "container_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emghd/errors.hpp"

namespace emghd::detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCategory::io, "cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) {
    throw Error(ErrorCategory::io, "read failed for " + path);
  }
  return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCategory::io, "cannot create " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out.good()) {
    throw Error(ErrorCategory::io, "write failed for " + path);
  }
}

std::uint32_t crc32_bytes(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off),
                  static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {
void append_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}
void append_u64le(std::string& out, std::uint64_t v) {
  append_u32le(out, static_cast<std::uint32_t>(v & 0xffffffffu));
  append_u32le(out, static_cast<std::uint32_t>(v >> 32));
}
std::uint32_t read_u32le(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(u[0]) | (static_cast<std::uint32_t>(u[1]) << 8) |
         (static_cast<std::uint32_t>(u[2]) << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
}
std::uint64_t read_u64le(const char* p) {
  return static_cast<std::uint64_t>(read_u32le(p)) |
         (static_cast<std::uint64_t>(read_u32le(p + 4)) << 32);
}
}  // namespace

void append_f32le(std::string& out, float v) { append_u32le(out, std::bit_cast<std::uint32_t>(v)); }
void append_f64le(std::string& out, double v) { append_u64le(out, std::bit_cast<std::uint64_t>(v)); }
float read_f32le(const char* p) { return std::bit_cast<float>(read_u32le(p)); }
double read_f64le(const char* p) { return std::bit_cast<double>(read_u64le(p)); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_u32hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return std::string(buf);
}

double parse_double(const std::string& token, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCategory::format_shape,
                std::string(what) + ": bad numeric value '" + token + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& token, const char* what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCategory::format_shape,
                std::string(what) + ": bad integer value '" + token + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& token, const char* what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCategory::format_shape,
                std::string(what) + ": bad unsigned value '" + token + "'");
  }
  return v;
}

std::uint32_t parse_u32hex(const std::string& token, const char* what) {
  std::uint32_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v, 16);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCategory::format_shape,
                std::string(what) + ": bad hex value '" + token + "'");
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::vector<std::string>> read_manifest_lines(const std::string& text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = split_ws(line);
    if (!toks.empty()) lines.push_back(std::move(toks));
  }
  return lines;
}

}  // namespace emghd::detail
