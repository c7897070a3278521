#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hytrain {

/// Formats a double with 12 significant digits (the project-wide CSV precision).
std::string format_sig12(double v);

/// Writes `content` to `path` atomically: the data lands in a sibling
/// temporary file first and is renamed into place only after a successful
/// write, so a failure never leaves a partial output behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

/// SHA-256 of a byte buffer, lowercase hex.
std::string sha256_hex(const void* data, size_t len);

/// SHA-256 of a file's contents, lowercase hex. Throws on read failure.
std::string sha256_file(const std::filesystem::path& path);

/// Splits one CSV record on commas. No quoting support; the project's CSV
/// dialect is plain comma-separated numeric fields with a header row.
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a double, rejecting trailing garbage. Throws std::runtime_error
/// with `context` in the message on failure.
double parse_double(const std::string& field, const std::string& context);

}  // namespace hytrain
