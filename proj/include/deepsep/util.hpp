#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace deepsep {

// 64-bit FNV-1a; stable across platforms, used for seeds and cache keys.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer; decorrelates nearby seeds.
std::uint64_t mix64(std::uint64_t x);

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partially written report.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Minimal RFC 4180 CSV support. Lines starting with '#' are comments.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

// Shortest round-trippable decimal form of a double.
std::string format_double(double value);

}  // namespace deepsep
