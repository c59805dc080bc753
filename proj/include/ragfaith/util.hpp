#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragfaith {

using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.3.1";

std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a. Stable across platforms, used for feature hashing.
std::uint64_t fnv1a64(std::string_view data) noexcept;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// One parsed line of a JSON-lines file. `line_no` is 1-based.
struct JsonLine {
    std::size_t line_no = 0;
    json value;
};

/// Parses every non-blank line; throws ValidationError naming the file and
/// line number on the first malformed line.
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);

/// Lenient variant: malformed lines are reported through `on_error` and skipped.
std::vector<JsonLine> read_jsonl_lenient(
    const std::filesystem::path& path,
    const std::function<void(std::size_t line_no, const std::string& error)>& on_error);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);

/// Fixed-point rendering with `digits` decimals; used in CSV output.
std::string format_fixed(double value, int digits);

}  // namespace ragfaith
