#include "cavkit/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "cavkit/error.hpp"

namespace cavkit::io {
namespace {

template <typename T>
T read_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

template <typename T>
void write_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFF));
  }
}

}  // namespace

Matrix decode_matrix(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::BadMagic, "missing CAVB magic");
  }
  if (bytes.size() < kHeaderBytes) fail(ErrorCode::TruncatedFile, "header is truncated");
  const auto version = read_le<std::uint32_t>(bytes.data() + 4);
  if (version != kVersion) {
    fail(ErrorCode::VersionMismatch, "unsupported CAVB version " + std::to_string(version));
  }
  const auto n = read_le<std::uint64_t>(bytes.data() + 8);
  const auto d = read_le<std::uint64_t>(bytes.data() + 16);
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (d != 0 && n > payload / 4 / d) {
    fail(ErrorCode::TruncatedFile, "declared " + std::to_string(n) + "x" + std::to_string(d) +
                                       " but only " + std::to_string(payload / 4) + " floats");
  }
  const std::size_t count = static_cast<std::size_t>(n * d);
  if (payload != count * 4) fail(ErrorCode::ParseError, "trailing bytes after payload");
  std::vector<double> values(count);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    const float f = std::bit_cast<float>(read_le<std::uint32_t>(p));
    if (!std::isfinite(f)) fail(ErrorCode::NonFiniteValue, "non-finite value in CAVB payload");
    values[i] = static_cast<double>(f);
  }
  return Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d), std::move(values));
}

std::vector<std::uint8_t> encode_matrix(const Matrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + m.values().size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  write_le<std::uint32_t>(out, kVersion);
  write_le<std::uint64_t>(out, m.rows());
  write_le<std::uint64_t>(out, m.cols());
  for (double v : m.values()) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) fail(ErrorCode::NonFiniteValue, "value not representable as f32");
    write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_matrix(bytes);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_matrix(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  Matrix m = load_matrix(path);
  validate_embeddings(m);
  return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  validate_embeddings(m);
  save_matrix(m, path);
}

Matrix row_vector(std::span<const double> v) {
  return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

void write_key_values(const KeyValues& entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  KeyValues out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ParseError, "expected key=value: " + line);
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    fail(ErrorCode::ParseError, "not a number: " + std::string(text));
  }
  return v;
}

const std::string* find_value(const KeyValues& entries, std::string_view key) {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

}  // namespace cavkit::io
