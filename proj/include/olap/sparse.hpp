#pragma once

// Compressed sparse row matrices and a fixed-capacity row accumulator used by
// the stencil assemblers.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace olap {

class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::uint32_t> col, std::vector<double> val);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return val_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> operator*(std::span<const double> x) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  double inf_norm() const;
  double max_abs() const;
  /// max |A_ij - A_ji| over stored entries.
  double max_asymmetry() const;
  std::vector<double> column_sums() const;
  std::vector<double> column_abs_sums() const;
  CsrMatrix transposed() const;

  /// One "row col value" line per stored entry, zero-based indices.
  void write_coo(std::ostream& os) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

/// Accumulates entries into at most `capacity` distinct columns per row.
/// Summation order per entry follows the order of add() calls.
class RowAccumulator {
 public:
  RowAccumulator(std::size_t rows, std::size_t capacity);
  void add(std::size_t row, std::size_t col, double value);
  CsrMatrix to_csr(std::size_t cols) const;

 private:
  std::size_t rows_, capacity_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

}  // namespace olap
