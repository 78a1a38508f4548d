#pragma once

#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <vss/errors.hpp>

namespace vss {

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hash: stable, portable, NON-cryptographic. Used for cache
// keys, config fingerprints and output checksums; collision resistance
// against adversaries is not a goal.
// ---------------------------------------------------------------------------
class Fnv1a {
 public:
  static constexpr std::uint64_t offset_basis = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t prime = 0x100000001b3ull;

  void feed_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= b[i];
      state_ *= prime;
    }
  }
  void feed(const std::string& s) {
    const std::uint64_t len = s.size();
    feed_bytes(&len, sizeof len);
    feed_bytes(s.data(), s.size());
  }
  void feed(double x) { feed_bytes(&x, sizeof x); }
  void feed(std::int64_t x) { feed_bytes(&x, sizeof x); }
  void feed(std::uint64_t x) { feed_bytes(&x, sizeof x); }
  void feed(int x) { feed(static_cast<std::int64_t>(x)); }
  void feed(bool x) { feed(static_cast<std::int64_t>(x ? 1 : 0)); }
  void feed(const Eigen::ArrayXd& a) {
    feed(static_cast<std::int64_t>(a.size()));
    feed_bytes(a.data(), sizeof(double) * a.size());
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = offset_basis;
};

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t hash_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + p.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.feed_bytes(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.value();
}

// ---------------------------------------------------------------------------
// text file helpers
// ---------------------------------------------------------------------------
inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + p.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + p.string());
}

// ---------------------------------------------------------------------------
// CSV writer: RFC 4180 (CRLF line endings, quoting when needed), UTF-8 header
// row, numbers at 17 significant digits (lossless double round-trip).
// ---------------------------------------------------------------------------
inline std::string format_full_precision(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// columns: equal-length arrays written side by side under `header`
inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<const Eigen::ArrayXd*>& columns) {
  if (header.size() != columns.size())
    throw IoError("csv_table: header/column count mismatch");
  Eigen::Index rows = columns.empty() ? 0 : columns.front()->size();
  for (const auto* c : columns)
    if (c->size() != rows) throw IoError("csv_table: ragged columns");
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += csv_escape(header[j]);
  }
  out += "\r\n";
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out += ',';
      out += format_full_precision((*columns[j])(i));
    }
    out += "\r\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary container: magic "VSSB", version, named sections of f64 / complex128
// (interleaved re,im) tensors or raw text. Little-endian, 64-bit dims,
// column-major payloads for 2-D sections.
// ---------------------------------------------------------------------------
struct ContainerSection {
  std::string name;
  int dtype = 0; // 0 = f64, 1 = c128, 2 = utf-8 text
  std::vector<std::uint64_t> dims;
  std::vector<double> f64;
  std::vector<std::complex<double>> c128;
  std::string text;

  static ContainerSection from_array(const std::string& name, const Eigen::ArrayXd& a) {
    ContainerSection s;
    s.name = name;
    s.dtype = 0;
    s.dims = {static_cast<std::uint64_t>(a.size())};
    s.f64.assign(a.data(), a.data() + a.size());
    return s;
  }
  static ContainerSection from_matrix(const std::string& name, const Eigen::MatrixXcd& m) {
    ContainerSection s;
    s.name = name;
    s.dtype = 1;
    s.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    s.c128.assign(m.data(), m.data() + m.size());
    return s;
  }
  static ContainerSection from_text(const std::string& name, const std::string& t) {
    ContainerSection s;
    s.name = name;
    s.dtype = 2;
    s.text = t;
    return s;
  }

  Eigen::ArrayXd to_array() const {
    if (dtype != 0 || dims.size() != 1) throw IoError("container section is not a 1-d f64 array: " + name);
    return Eigen::Map<const Eigen::ArrayXd>(f64.data(), static_cast<Eigen::Index>(dims[0]));
  }
  Eigen::MatrixXcd to_matrix() const {
    if (dtype != 1 || dims.size() != 2) throw IoError("container section is not a 2-d c128 matrix: " + name);
    return Eigen::Map<const Eigen::MatrixXcd>(c128.data(), static_cast<Eigen::Index>(dims[0]),
                                              static_cast<Eigen::Index>(dims[1]));
  }
};

namespace detail {
template <class T>
void put_raw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get_raw(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw IoError("container truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof v);
  off += sizeof v;
  return v;
}
} // namespace detail

inline void write_container(const std::filesystem::path& p,
                            const std::vector<ContainerSection>& sections) {
  std::string out;
  out += "VSSB";
  detail::put_raw<std::uint32_t>(out, 1u); // format version
  detail::put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) {
    detail::put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out += s.name;
    detail::put_raw<std::uint8_t>(out, static_cast<std::uint8_t>(s.dtype));
    if (s.dtype == 2) {
      detail::put_raw<std::uint64_t>(out, static_cast<std::uint64_t>(s.text.size()));
      out += s.text;
      continue;
    }
    detail::put_raw<std::uint8_t>(out, static_cast<std::uint8_t>(s.dims.size()));
    std::uint64_t count = 1;
    for (auto d : s.dims) {
      detail::put_raw<std::uint64_t>(out, d);
      count *= d;
    }
    if (s.dtype == 0) {
      if (s.f64.size() != count) throw IoError("container section size mismatch: " + s.name);
      out.append(reinterpret_cast<const char*>(s.f64.data()), count * sizeof(double));
    } else if (s.dtype == 1) {
      if (s.c128.size() != count) throw IoError("container section size mismatch: " + s.name);
      out.append(reinterpret_cast<const char*>(s.c128.data()), count * 2 * sizeof(double));
    } else {
      throw IoError("container: unknown dtype");
    }
  }
  write_text_file(p, out);
}

inline std::map<std::string, ContainerSection> read_container(const std::filesystem::path& p) {
  const std::string in = read_text_file(p);
  std::size_t off = 0;
  if (in.size() < 4 || in.compare(0, 4, "VSSB") != 0)
    throw IoError("not a VSSB container: " + p.string());
  off = 4;
  const auto version = detail::get_raw<std::uint32_t>(in, off);
  if (version != 1) throw IoError("unsupported container version");
  const auto n_sections = detail::get_raw<std::uint32_t>(in, off);
  std::map<std::string, ContainerSection> out;
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    ContainerSection s;
    const auto name_len = detail::get_raw<std::uint32_t>(in, off);
    if (off + name_len > in.size()) throw IoError("container truncated");
    s.name.assign(in, off, name_len);
    off += name_len;
    s.dtype = detail::get_raw<std::uint8_t>(in, off);
    if (s.dtype == 2) {
      const auto len = detail::get_raw<std::uint64_t>(in, off);
      if (off + len > in.size()) throw IoError("container truncated");
      s.text.assign(in, off, static_cast<std::size_t>(len));
      off += static_cast<std::size_t>(len);
    } else {
      const auto ndim = detail::get_raw<std::uint8_t>(in, off);
      std::uint64_t count = 1;
      for (int d = 0; d < ndim; ++d) {
        s.dims.push_back(detail::get_raw<std::uint64_t>(in, off));
        count *= s.dims.back();
      }
      if (s.dtype == 0) {
        s.f64.resize(static_cast<std::size_t>(count));
        if (off + count * sizeof(double) > in.size()) throw IoError("container truncated");
        std::memcpy(s.f64.data(), in.data() + off, static_cast<std::size_t>(count) * sizeof(double));
        off += static_cast<std::size_t>(count) * sizeof(double);
      } else if (s.dtype == 1) {
        s.c128.resize(static_cast<std::size_t>(count));
        if (off + count * 2 * sizeof(double) > in.size()) throw IoError("container truncated");
        std::memcpy(s.c128.data(), in.data() + off,
                    static_cast<std::size_t>(count) * 2 * sizeof(double));
        off += static_cast<std::size_t>(count) * 2 * sizeof(double);
      } else {
        throw IoError("container: unknown dtype");
      }
    }
    out[s.name] = std::move(s);
  }
  return out;
}

} // namespace vss
