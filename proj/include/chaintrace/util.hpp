#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chaintrace::util {

std::string to_hex(std::span<const std::uint8_t> bytes);

/// Hex of the byte-reversed input. Transaction ids are conventionally
/// displayed with the digest bytes reversed.
std::string to_hex_reversed(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> from_hex(std::string_view hex);

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" (optional trailing 'Z'),
/// or a plain integer, all interpreted as UTC. Throws std::invalid_argument.
std::int64_t parse_time(const std::string& text);

/// UTC calendar day of an epoch timestamp, as "YYYY-MM-DD".
std::string utc_date(std::int64_t epoch_seconds);

/// Epoch seconds of midnight UTC on the given civil date.
std::int64_t epoch_from_civil(int year, int month, int day);

/// Parses a duration like "300", "300s", "5m", "2h", "1d" into seconds.
std::int64_t parse_duration(const std::string& text);

std::vector<std::string> split(std::string_view text, char delim);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace chaintrace::util
