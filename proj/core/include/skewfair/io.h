#ifndef SKEWFAIR_IO_H_
#define SKEWFAIR_IO_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace skewfair {

using Json = nlohmann::json;

// Reads a whole file. Throws IoError.
std::string ReadTextFile(const std::filesystem::path& path);

// Writes `content` to `path`, replacing any existing file. Throws IoError.
void WriteTextFile(const std::filesystem::path& path, std::string_view content);

// Parses a single JSON document from a file.
Json ReadJsonFile(const std::filesystem::path& path);

// Calls `fn(object, line_number)` for every non-blank line of a JSON Lines
// file. Line numbers are 1-based. Malformed lines raise ValidationError
// naming the file and line.
void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(const Json&, std::size_t)>& fn);

// Rounds to 12 significant digits. nlohmann::json prints the shortest
// representation that round-trips, so the serialized text has at most 12
// significant digits.
double Round12(double value);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string HashHex(std::string_view bytes);

// "file:line: message" prefix used by every loader.
std::string Where(const std::filesystem::path& path, std::size_t line);

}  // namespace skewfair

#endif  // SKEWFAIR_IO_H_
