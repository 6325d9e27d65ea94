#ifndef SKD_IO_HPP
#define SKD_IO_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skd/errors.hpp"
#include "skd/matrix.hpp"

namespace skd {

// Matrix files come in two interchangeable forms:
//   * text CSV, one row per line, comma-separated decimal, no header;
//   * binary: magic "SKDM", u64 rows, u64 cols, then row-major
//     little-endian f64 entries. Binary round-trips bit-exactly.
// Readers sniff the magic bytes, so either form can be passed anywhere a
// matrix file is expected.

namespace detail {

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  std::array<unsigned char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b.data()), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
  std::array<unsigned char, 8> b;
  is.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

inline void write_f64_le(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  write_u64_le(os, v);
}

inline double read_f64_le(std::istream& is) {
  std::uint64_t v = read_u64_le(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace detail

inline constexpr char kMatrixMagic[4] = {'S', 'K', 'D', 'M'};

inline void write_matrix_binary(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path);
  os.write(kMatrixMagic, 4);
  detail::write_u64_le(os, static_cast<std::uint64_t>(m.rows()));
  detail::write_u64_le(os, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) detail::write_f64_le(os, m(i, j));
  require(os.good(), "write failed: " + path);
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  require(os.good(), "cannot open for writing: " + path);
  os.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
  require(os.good(), "write failed: " + path);
}

// Writes CSV for *.csv paths, binary otherwise.
inline void write_matrix(const std::string& path, const Matrix& m) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    write_matrix_csv(path, m);
  else
    write_matrix_binary(path, m);
}

inline Matrix read_matrix_csv(std::istream& is, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw precondition_error("bad numeric cell in " + path + ": '" + cell + "'");
      }
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
      require(pos == cell.size(), "bad numeric cell in " + path + ": '" + cell + "'");
      row.push_back(v);
    }
    require(!row.empty(), "empty row in " + path);
    require(rows.empty() || row.size() == rows.front().size(), "ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "empty matrix file: " + path);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  require_finite(m, "matrix file " + path);
  return m;
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path);
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  if (is.gcount() == 4 && std::memcmp(magic, kMatrixMagic, 4) == 0) {
    std::uint64_t rows = detail::read_u64_le(is);
    std::uint64_t cols = detail::read_u64_le(is);
    require(is.good(), "truncated matrix file: " + path);
    require(rows > 0 && cols > 0, "degenerate matrix in " + path);
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = detail::read_f64_le(is);
    require(!is.fail(), "truncated matrix file: " + path);
    require_finite(m, "matrix file " + path);
    return m;
  }
  is.clear();
  is.seekg(0);
  return read_matrix_csv(is, path);
}

// --- index sets -------------------------------------------------------

// One index per line.
inline void write_index_csv(const std::string& path, const IndexSet& idx) {
  std::ofstream os(path);
  require(os.good(), "cannot open for writing: " + path);
  for (Index i : idx.indices()) os << i << '\n';
  require(os.good(), "write failed: " + path);
}

// --- PGM (binary P5, 8-bit) -------------------------------------------

struct GrayImage {
  Matrix pixels;  // values in [0, 255]
};

inline void write_pgm(const std::string& path, const Matrix& pixels) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path);
  os << "P5\n" << pixels.cols() << " " << pixels.rows() << "\n255\n";
  for (Index i = 0; i < pixels.rows(); ++i)
    for (Index j = 0; j < pixels.cols(); ++j) {
      double v = std::min(255.0, std::max(0.0, std::round(pixels(i, j))));
      unsigned char c = static_cast<unsigned char>(v);
      os.write(reinterpret_cast<const char*>(&c), 1);
    }
  require(os.good(), "write failed: " + path);
}

inline Matrix read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path);
  std::string magic;
  is >> magic;
  require(magic == "P5", "not a binary PGM (P5): " + path);
  auto next_token = [&is, &path]() {
    std::string tok;
    while (true) {
      require(static_cast<bool>(is >> tok), "truncated PGM header: " + path);
      if (tok[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return tok;
    }
  };
  long width = std::stol(next_token());
  long height = std::stol(next_token());
  long maxval = std::stol(next_token());
  require(width > 0 && height > 0, "bad PGM dimensions: " + path);
  require(maxval == 255, "only 8-bit PGM supported: " + path);
  is.get();  // single whitespace after maxval
  Matrix m(static_cast<Index>(height), static_cast<Index>(width));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      int c = is.get();
      require(c != EOF, "truncated PGM data: " + path);
      m(i, j) = static_cast<double>(c);
    }
  return m;
}

}  // namespace skd

#endif  // SKD_IO_HPP
