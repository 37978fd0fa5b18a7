#include "olap/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "olap/parallel.hpp"
#include "olap/text.hpp"

namespace olap {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::uint32_t> col, std::vector<double> val)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col)), val_(std::move(val)) {
  if (row_ptr_.size() != rows_ + 1 || col_.size() != val_.size() || row_ptr_.back() != val_.size())
    throw std::invalid_argument("inconsistent CSR arrays");
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  par::for_each(rows_, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += val_[p] * x[col_[p]];
    y[i] = s;
  });
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) y[col_[p]] += val_[p] * x[i];
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto b = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto e = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
  return it != e && *it == j ? val_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(rows_);
  for (std::size_t i = 0; i < rows_; ++i) d[i] = at(i, i);
  return d;
}

double CsrMatrix::inf_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += std::abs(val_[p]);
    m = std::max(m, s);
  }
  return m;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : val_) m = std::max(m, std::abs(v));
  return m;
}

double CsrMatrix::max_asymmetry() const {
  if (rows_ != cols_) throw std::invalid_argument("max_asymmetry needs a square matrix");
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      m = std::max(m, std::abs(val_[p] - at(col_[p], i)));
  return m;
}

std::vector<double> CsrMatrix::column_sums() const {
  std::vector<double> s(cols_, 0.0);
  for (std::size_t p = 0; p < val_.size(); ++p) s[col_[p]] += val_[p];
  return s;
}

std::vector<double> CsrMatrix::column_abs_sums() const {
  std::vector<double> s(cols_, 0.0);
  for (std::size_t p = 0; p < val_.size(); ++p) s[col_[p]] += std::abs(val_[p]);
  return s;
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<std::size_t> ptr(cols_ + 1, 0);
  for (auto c : col_) ++ptr[c + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  std::vector<std::size_t> next(ptr.begin(), ptr.end() - 1);
  std::vector<std::uint32_t> col(val_.size());
  std::vector<double> val(val_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t q = next[col_[p]]++;
      col[q] = static_cast<std::uint32_t>(i);
      val[q] = val_[p];
    }
  return CsrMatrix(cols_, rows_, std::move(ptr), std::move(col), std::move(val));
}

void CsrMatrix::write_coo(std::ostream& os) const {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      os << i << ' ' << col_[p] << ' ' << format_double(val_[p]) << '\n';
}

RowAccumulator::RowAccumulator(std::size_t rows, std::size_t capacity)
    : rows_(rows), capacity_(capacity), count_(rows, 0), col_(rows * capacity), val_(rows * capacity) {}

void RowAccumulator::add(std::size_t row, std::size_t col, double value) {
  const std::size_t base = row * capacity_;
  const std::uint32_t c = static_cast<std::uint32_t>(col);
  for (std::uint32_t k = 0; k < count_[row]; ++k)
    if (col_[base + k] == c) {
      val_[base + k] += value;
      return;
    }
  if (count_[row] == capacity_) throw std::logic_error("stencil exceeds accumulator capacity");
  col_[base + count_[row]] = c;
  val_[base + count_[row]] = value;
  ++count_[row];
}

CsrMatrix RowAccumulator::to_csr(std::size_t cols) const {
  std::vector<std::size_t> ptr(rows_ + 1, 0);
  for (std::size_t i = 0; i < rows_; ++i) ptr[i + 1] = ptr[i] + count_[i];
  std::vector<std::uint32_t> col(ptr.back());
  std::vector<double> val(ptr.back());
  par::for_each(rows_, [&](std::size_t i) {
    const std::size_t base = i * capacity_;
    std::vector<std::uint32_t> order(count_[i]);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return col_[base + a] < col_[base + b]; });
    for (std::size_t k = 0; k < order.size(); ++k) {
      col[ptr[i] + k] = col_[base + order[k]];
      val[ptr[i] + k] = val_[base + order[k]];
    }
  });
  return CsrMatrix(rows_, cols, std::move(ptr), std::move(col), std::move(val));
}

}  // namespace olap
