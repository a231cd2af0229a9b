#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavkit/matrix.hpp"

namespace cavkit::io {

// CAVB matrix file, little-endian:
//   "CAVB" | u32 version = 1 | u64 n | u64 d | n*d IEEE-754 f32, row-major.
// Vectors are stored as 1 x len matrices.
inline constexpr char kMagic[4] = {'C', 'A', 'V', 'B'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

// Throws BadMagic, VersionMismatch, TruncatedFile, NonFiniteValue, IoError.
Matrix load_matrix(const std::filesystem::path& path);
Matrix decode_matrix(std::span<const std::uint8_t> bytes);

// Values are narrowed to f32; throws NonFiniteValue if any value is not
// representable as a finite f32, IoError on write failure.
void save_matrix(const Matrix& m, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_matrix(const Matrix& m);

// load_matrix plus the embedding invariants (n >= 1, d >= 1).
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

Matrix row_vector(std::span<const double> v);

// Plain-text sidecar of `key=value` lines, written in the given order.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
void write_key_values(const KeyValues& entries, const std::filesystem::path& path);
// Blank lines and lines starting with '#' are skipped. Throws ParseError on a
// line without '=', IoError when the file cannot be read.
KeyValues read_key_values(const std::filesystem::path& path);
// Shortest text that reads back to the same double.
std::string format_double(double v);
// Throws ParseError unless the whole string is a finite number.
double parse_double(std::string_view text);

// Value for key, or nullptr.
const std::string* find_value(const KeyValues& entries, std::string_view key);

}  // namespace cavkit::io
