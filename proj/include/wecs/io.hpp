#pragma once

// File formats:
//   WECS1  "WECS1" | rows u32 LE | cols u32 LE | dtype u8 (4 = f32, 8 = f64)
//          | row-major little-endian payload
//   PGM    binary P5, maxval <= 65535 (16-bit samples big-endian)
//   CSV    comma-separated numbers, one matrix row per line; a leading
//          non-numeric line is taken as a header
// Stack manifests are JSON documents listing image paths relative to the
// manifest's directory.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "wecs/change_series.hpp"
#include "wecs/error.hpp"
#include "wecs/matrix.hpp"

namespace wecs::io {

namespace fs = std::filesystem;

inline constexpr std::string_view kMatrixMagic = "WECS1";
inline constexpr std::string_view kManifestFormat = "wecs-stack-manifest";
inline constexpr std::string_view kManifestVersion = "1";

enum class Dtype : std::uint8_t { f32 = 4, f64 = 8 };
enum class MatrixFormat { wecs1, pgm, csv };

inline MatrixFormat parse_format(std::string_view s) {
  if (s == "wecs1") return MatrixFormat::wecs1;
  if (s == "pgm") return MatrixFormat::pgm;
  if (s == "csv") return MatrixFormat::csv;
  fail(ErrorCategory::invalid_argument, "unknown matrix format '" + std::string(s) + "'");
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Writes to a sibling temporary and renames over the target, so readers
// never observe a partial file.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::io, "cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCategory::io, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCategory::io, "cannot move output into place at '" + path.string() + "'");
  }
}

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::string_view in, std::size_t offset) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

inline Matrix parse_wecs1(std::string_view bytes, const std::string& name) {
  constexpr std::size_t header = 5 + 4 + 4 + 1;
  if (bytes.size() < header)
    fail(ErrorCategory::format, name + ": truncated WECS1 header (" + std::to_string(bytes.size()) +
                                    " bytes)");
  const auto rows = get_le<std::uint32_t>(bytes, 5);
  const auto cols = get_le<std::uint32_t>(bytes, 9);
  const auto tag = static_cast<std::uint8_t>(bytes[13]);
  if (tag != 4 && tag != 8)
    fail(ErrorCategory::format, name + ": unknown dtype tag " + std::to_string(tag) + " at byte 13");
  const std::size_t count = std::size_t{rows} * cols;
  const std::size_t expected = header + count * tag;
  if (bytes.size() != expected)
    fail(ErrorCategory::format, name + ": payload length mismatch, expected " +
                                    std::to_string(expected) + " bytes, found " +
                                    std::to_string(bytes.size()) + " (truncated at byte " +
                                    std::to_string(std::min(bytes.size(), expected)) + ")");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = header + i * tag;
    const double v = tag == 8 ? get_le<double>(bytes, off)
                              : static_cast<double>(get_le<float>(bytes, off));
    if (!std::isfinite(v))
      fail(ErrorCategory::non_finite, name + ": non-finite value at byte offset " + std::to_string(off));
    m.flat()[i] = v;
  }
  return m;
}

inline Matrix parse_pgm(std::string_view bytes, const std::string& name) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* field) {
    skip_space();
    const std::size_t start = pos;
    unsigned long v = 0;
    const auto res = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
    if (res.ec != std::errc{} || res.ptr == bytes.data() + start)
      fail(ErrorCategory::format, name + ": bad PGM " + field + " at byte offset " + std::to_string(start));
    pos = static_cast<std::size_t>(res.ptr - bytes.data());
    return v;
  };
  const auto width = read_uint("width");
  const auto height = read_uint("height");
  const auto maxval = read_uint("maxval");
  if (maxval == 0 || maxval > 65535)
    fail(ErrorCategory::format, name + ": PGM maxval " + std::to_string(maxval) + " out of range");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    fail(ErrorCategory::format, name + ": missing whitespace after PGM header at byte offset " +
                                    std::to_string(pos));
  ++pos;
  const std::size_t sample = maxval < 256 ? 1 : 2;
  const std::size_t need = width * height * sample;
  if (bytes.size() - pos < need)
    fail(ErrorCategory::format, name + ": truncated PGM payload, expected " + std::to_string(need) +
                                    " bytes from offset " + std::to_string(pos) + ", found " +
                                    std::to_string(bytes.size() - pos));
  Matrix m(height, width);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.flat()[i] = sample == 1 ? p[i] : static_cast<double>((p[2 * i] << 8) | p[2 * i + 1]);
  return m;
}

inline std::optional<std::vector<double>> parse_csv_numbers(std::string_view line) {
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size())
      return std::nullopt;
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

inline Matrix parse_csv(std::string_view text, const std::string& name) {
  std::vector<double> data;
  std::size_t cols = 0, rows = 0, line_no = 0, pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto values = parse_csv_numbers(line);
    if (!values) {
      if (first) {
        first = false;
        continue;  // header
      }
      fail(ErrorCategory::format, name + ": non-numeric field on line " + std::to_string(line_no));
    }
    first = false;
    if (rows == 0) cols = values->size();
    if (values->size() != cols)
      fail(ErrorCategory::format, name + ": ragged CSV, line " + std::to_string(line_no) + " has " +
                                      std::to_string(values->size()) + " fields, expected " +
                                      std::to_string(cols));
    for (double v : *values)
      if (!std::isfinite(v))
        fail(ErrorCategory::non_finite, name + ": non-finite value on line " + std::to_string(line_no));
    data.insert(data.end(), values->begin(), values->end());
    ++rows;
  }
  if (rows == 0) fail(ErrorCategory::format, name + ": CSV holds no numeric rows");
  return Matrix(rows, cols, std::move(data));
}

}  // namespace detail

// Reads a WECS1, P5 PGM or CSV matrix, detected from the leading bytes.
inline Matrix read_image(const fs::path& path) {
  const std::string bytes = read_file(path);
  const std::string name = path.string();
  if (bytes.starts_with(kMatrixMagic)) return detail::parse_wecs1(bytes, name);
  if (bytes.starts_with("P5")) return detail::parse_pgm(bytes, name);
  if (bytes.starts_with("WECS") || bytes.starts_with("P2") || bytes.starts_with("P6"))
    fail(ErrorCategory::format, name + ": unsupported magic at byte offset 0");
  return detail::parse_csv(bytes, name);
}

inline std::string encode_wecs1(const Matrix& m, Dtype dtype = Dtype::f64) {
  std::string out(kMatrixMagic);
  out.reserve(14 + m.size() * static_cast<std::size_t>(dtype));
  detail::put_le(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_le(out, static_cast<std::uint32_t>(m.cols()));
  out.push_back(static_cast<char>(dtype));
  for (double v : m.flat()) {
    if (dtype == Dtype::f64)
      detail::put_le(out, v);
    else
      detail::put_le(out, static_cast<float>(v));
  }
  return out;
}

inline std::string encode_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (r) out += '\n';
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
  }
  return out;
}

inline std::string pgm_header(Dims d, unsigned maxval) {
  return "P5\n" + std::to_string(d.cols) + " " + std::to_string(d.rows) + "\n" +
         std::to_string(maxval) + "\n";
}

// Affine map [min, max] -> [0, 65535]; the sidecar records the mapping.
struct PgmScale {
  double min = 0.0;
  double max = 0.0;
};

inline std::string encode_pgm(const Matrix& m, PgmScale* scale_out = nullptr) {
  PgmScale s;
  if (!m.empty()) {
    const auto [lo, hi] = std::minmax_element(m.flat().begin(), m.flat().end());
    s = {*lo, *hi};
  }
  std::string out = pgm_header(m.dims(), 65535);
  const double span = s.max - s.min;
  for (double v : m.flat()) {
    const double u = span > 0.0 ? (v - s.min) / span * 65535.0 : 0.0;
    const auto q = static_cast<std::uint16_t>(std::clamp(std::lround(u), 0L, 65535L));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xFF));
  }
  if (scale_out) *scale_out = s;
  return out;
}

inline std::string encode_scale_sidecar(const PgmScale& s) {
  return "min=" + format_double(s.min) + "\nmax=" + format_double(s.max) + "\nmaxval=65535\n";
}

inline fs::path sidecar_path(const fs::path& pgm) { return fs::path(pgm.string() + ".scale"); }

inline void write_matrix(const Matrix& m, const fs::path& path, MatrixFormat format,
                         Dtype dtype = Dtype::f64) {
  switch (format) {
    case MatrixFormat::wecs1: write_file_atomic(path, encode_wecs1(m, dtype)); return;
    case MatrixFormat::csv: write_file_atomic(path, encode_csv(m)); return;
    case MatrixFormat::pgm: {
      PgmScale s;
      const std::string bytes = encode_pgm(m, &s);
      write_file_atomic(sidecar_path(path), encode_scale_sidecar(s));
      write_file_atomic(path, bytes);
      return;
    }
  }
}

// Masks are written as 8-bit PGM with 0 / 255 samples.
inline void write_mask_pgm(const Mask& mask, const fs::path& path) {
  std::string out = pgm_header(mask.dims(), 255);
  for (unsigned char v : mask.flat()) out.push_back(static_cast<char>(v ? 255 : 0));
  write_file_atomic(path, out);
}

// Any non-zero sample counts as set.
inline Mask read_mask(const fs::path& path) {
  const Matrix m = read_image(path);
  Mask out(m.dims(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) out.flat()[i] = m.flat()[i] != 0.0;
  return out;
}

struct ManifestEntry {
  std::string path;  // relative to the manifest directory, or absolute
  std::string timestamp;
  std::string channel;
};

struct StackManifest {
  std::string version{kManifestVersion};
  std::vector<ManifestEntry> entries;
  fs::path base_dir;

  fs::path resolve(const ManifestEntry& e) const {
    const fs::path p(e.path);
    return p.is_absolute() ? p : base_dir / p;
  }

  bool has_timestamps() const {
    return !entries.empty() && !entries.front().timestamp.empty();
  }

  void validate() const {
    if (entries.empty()) fail(ErrorCategory::invalid_argument, "manifest has no entries");
    const bool stamped = has_timestamps();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].timestamp.empty() == stamped)
        fail(ErrorCategory::invalid_argument,
             "manifest entry " + std::to_string(i) + ": timestamps must be given for all entries or none");
      if (stamped && i > 0 && !(entries[i - 1].timestamp < entries[i].timestamp))
        fail(ErrorCategory::invalid_argument,
             "manifest entry " + std::to_string(i) + ": timestamps not strictly increasing");
      if (!entries[i].channel.empty()) parse_channel(entries[i].channel);
    }
  }
};

inline std::string encode_manifest(const StackManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = kManifestFormat;
  j["version"] = m.version;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json je;
    je["path"] = e.path;
    if (!e.timestamp.empty()) je["timestamp"] = e.timestamp;
    if (!e.channel.empty()) je["channel"] = e.channel;
    j["entries"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

inline StackManifest load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::format, path.string() + ": manifest is not valid JSON at byte offset " +
                                    std::to_string(e.byte));
  }
  StackManifest m;
  m.base_dir = path.parent_path();
  try {
    if (j.at("format").get<std::string>() != kManifestFormat)
      fail(ErrorCategory::format, path.string() + ": not a stack manifest");
    m.version = j.at("version").get<std::string>();
    if (m.version != kManifestVersion)
      fail(ErrorCategory::format, path.string() + ": unsupported manifest version " + m.version);
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.path = je.at("path").get<std::string>();
      e.timestamp = je.value("timestamp", "");
      e.channel = je.value("channel", "");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::format, path.string() + ": malformed manifest: " + e.what());
  }
  m.validate();
  for (const auto& e : m.entries)
    if (!fs::exists(m.resolve(e)))
      fail(ErrorCategory::io, path.string() + ": entry '" + e.path + "' does not exist");
  return m;
}

inline ImageStack load_stack(const StackManifest& m) {
  ImageStack s;
  for (const auto& e : m.entries) {
    s.images.push_back(read_image(m.resolve(e)));
    if (m.has_timestamps()) s.timestamps.push_back(e.timestamp);
  }
  if (!m.entries.front().channel.empty()) s.channel = parse_channel(m.entries.front().channel);
  s.validate();
  return s;
}

// "index,value" with 1-based time index.
inline std::string encode_series_csv(const std::vector<double>& values) {
  std::string out = "index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    out += std::to_string(i + 1) + "," + format_double(values[i]) + "\n";
  return out;
}

}  // namespace wecs::io
