#pragma once

// Internal helpers shared by the on-disk containers (recordings, associative
// memories, models): text manifests plus little-endian binary payloads with a
// CRC32 gate. Not part of the public API.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace emghd::detail {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

std::uint32_t crc32_bytes(std::string_view bytes);

void append_f32le(std::string& out, float v);
void append_f64le(std::string& out, double v);
float read_f32le(const char* p);
double read_f64le(const char* p);

std::string format_double(double v);  // shortest round-trip, locale-free
std::string format_u32hex(std::uint32_t v);

double parse_double(const std::string& token, const char* what);
std::int64_t parse_int(const std::string& token, const char* what);
std::uint64_t parse_uint(const std::string& token, const char* what);
std::uint32_t parse_u32hex(const std::string& token, const char* what);

std::vector<std::string> split_ws(const std::string& line);

// Token lines of a manifest, in order, with blank lines dropped.
std::vector<std::vector<std::string>> read_manifest_lines(const std::string& text);

}  // namespace emghd::detail
