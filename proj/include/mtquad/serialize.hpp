#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace mtquad {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian-host binary archive. Doubles are written bit-for-bit.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  template <typename T>
    requires std::is_arithmetic_v<T> || std::is_enum_v<T>
  void write(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void write(const std::string& s) {
    write<std::uint64_t>(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename Derived>
    requires std::is_class_v<Derived>
  void write(const Eigen::DenseBase<Derived>& m) {
    write<std::int64_t>(m.rows());
    write<std::int64_t>(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) write<double>(m(i, j));
  }
  void write(const std::vector<double>& v) {
    write<std::uint64_t>(v.size());
    for (double x : v) write(x);
  }
  void tag(const char* t) { write(std::string(t)); }

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}

  template <typename T>
    requires std::is_arithmetic_v<T> || std::is_enum_v<T>
  T read() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is_) throw FormatError("unexpected end of archive");
    return v;
  }
  std::string read_string() {
    const auto n = read<std::uint64_t>();
    if (n > (1u << 30)) throw FormatError("corrupt string length");
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    if (!is_) throw FormatError("unexpected end of archive");
    return s;
  }
  Eigen::MatrixXd read_matrix() {
    const auto r = read<std::int64_t>();
    const auto c = read<std::int64_t>();
    if (r < 0 || c < 0 || r * c > (1 << 28)) throw FormatError("corrupt matrix shape");
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = read<double>();
    return m;
  }
  template <typename Fixed>
  Fixed read_fixed() {
    Eigen::MatrixXd m = read_matrix();
    if (m.rows() != Fixed::RowsAtCompileTime || m.cols() != Fixed::ColsAtCompileTime)
      throw FormatError("fixed-size matrix shape mismatch");
    return Fixed(m);
  }
  Eigen::VectorXd read_vector() {
    Eigen::MatrixXd m = read_matrix();
    if (m.cols() != 1) throw FormatError("expected column vector");
    return m.col(0);
  }
  std::vector<double> read_doubles() {
    const auto n = read<std::uint64_t>();
    if (n > (1u << 28)) throw FormatError("corrupt vector length");
    std::vector<double> v(n);
    for (auto& x : v) x = read<double>();
    return v;
  }
  void expect(const char* t) {
    if (read_string() != t) throw FormatError(std::string("archive section mismatch at ") + t);
  }

 private:
  std::istream& is_;
};

}  // namespace mtquad
