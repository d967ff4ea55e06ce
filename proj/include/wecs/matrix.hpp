#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wecs/error.hpp"

namespace wecs {

struct Dims {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(Dims d) {
  return std::to_string(d.rows) + "x" + std::to_string(d.cols);
}

// Dense row-major matrix of doubles. All internal computation is done in
// 64-bit floating point whatever the on-disk dtype was.
template <typename T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(Dims d, T fill = T{}) : BasicMatrix(d.rows, d.cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      fail(ErrorCategory::dimension_mismatch,
           "matrix payload has " + std::to_string(data_.size()) +
               " values, expected " + std::to_string(rows_ * cols_));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  Dims dims() const { return {rows_, cols_}; }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using Mask = BasicMatrix<unsigned char>;

inline bool all_finite(const Matrix& m) {
  return std::all_of(m.flat().begin(), m.flat().end(),
                     [](double v) { return std::isfinite(v); });
}

inline void require_finite(const Matrix& m, std::string_view what) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.flat()[i]))
      fail(ErrorCategory::non_finite,
           std::string(what) + ": non-finite value at (" + std::to_string(i / m.cols()) +
               ", " + std::to_string(i % m.cols()) + ")");
  }
}

inline void require_same_dims(Dims a, Dims b, std::string_view what) {
  if (a != b)
    fail(ErrorCategory::dimension_mismatch,
         std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double sum_squares(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s.add(x * x);
  return s.value();
}

inline double sum_squares(const Matrix& m) { return sum_squares(m.flat()); }

inline std::size_t count_true(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.flat().begin(), m.flat().end(),
                                                [](unsigned char v) { return v != 0; }));
}

}  // namespace wecs
