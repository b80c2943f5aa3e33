#pragma once

#include <stdexcept>
#include <string>

namespace emghd {

// Error categories surfaced by the CLI as machine-readable exit codes.
enum class ErrorCategory {
  usage,
  config,
  io,
  format_checksum,
  format_shape,
  format_label,
  format_overlap,
  validation,
  import_mapping,
};

constexpr const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format_checksum: return "format_checksum";
    case ErrorCategory::format_shape: return "format_shape";
    case ErrorCategory::format_label: return "format_label";
    case ErrorCategory::format_overlap: return "format_overlap";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::import_mapping: return "import_mapping";
  }
  return "unknown";
}

constexpr int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::config: return 2;
    case ErrorCategory::io: return 3;
    case ErrorCategory::format_checksum:
    case ErrorCategory::format_shape:
    case ErrorCategory::format_label:
    case ErrorCategory::format_overlap: return 4;
    case ErrorCategory::validation: return 5;
    case ErrorCategory::import_mapping: return 6;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace emghd
