#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ncouple {

class Rng;

// Dense row-major matrix of doubles. Column vectors are N x 1 matrices.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Mat::from_rows({{1, 2}, {3, 4}})
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat column(std::initializer_list<double> values);
  static Mat identity(std::size_t n);
  static Mat ones(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  // Columns [begin, end) as a new matrix.
  Mat col_range(std::size_t begin, std::size_t end) const;

  std::string shape_str() const;

  // Exact element-wise equality (bit-level for finite values).
  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Nonlinearities.
Mat relu(const Mat& x);
// 1 where x > 0, else 0 (derivative at 0 taken as 0).
Mat relu_deriv(const Mat& x);
// -1 / 0 / +1 with sgn(0) = 0.
Mat signum(const Mat& x);

// Linear algebra. All throw ShapeError naming both shapes on mismatch.
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat hadamard(const Mat& a, const Mat& b);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double alpha);
Mat abs(const Mat& a);

// out(i, j) = w(i, j) + b(j): the bias entry indexed by the column.
Mat add_bias_cols(const Mat& w, const Mat& b);
// out(i, j) = m(i, j) + b(i): b added to every column (affine layer broadcast).
Mat add_column_vector(const Mat& m, const Mat& b);
// Sum over columns, giving an rows x 1 vector.
Mat row_sums(const Mat& m);

double trace_abs(const Mat& a);
double l1_norm(const Mat& a);
double l2_norm_sq(const Mat& a);
double sum(const Mat& a);
double max_abs(const Mat& a);
bool all_finite(const Mat& a);

// Standard normal samples scaled by sqrt(1 / n). Requires n > 0.
Mat glorot_like_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t n);

}  // namespace ncouple
