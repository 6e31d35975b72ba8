#include "ncouple/mat.hpp"

#include <algorithm>
#include <cmath>

#include "ncouple/error.hpp"
#include "ncouple/rng.hpp"

namespace ncouple {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Mat& a, const Mat& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void require_same_shape(const char* op, const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a, b);
}

template <class F>
Mat map(const Mat& x, F f) {
  Mat out(x.rows(), x.cols());
  auto src = x.data();
  auto dst = out.data();
  std::transform(src.begin(), src.end(), dst.begin(), f);
  return out;
}

template <class F>
Mat zip(const char* op, const Mat& a, const Mat& b, F f) {
  require_same_shape(op, a, b);
  Mat out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Mat: " + std::to_string(data_.size()) + " values cannot fill " +
                     shape_str());
  }
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Mat::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

Mat Mat::column(std::initializer_list<double> values) {
  return Mat(values.size(), 1, std::vector<double>(values));
}

Mat Mat::identity(std::size_t n) {
  Mat out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Mat Mat::ones(std::size_t rows, std::size_t cols) { return Mat(rows, cols, 1.0); }

Mat Mat::col_range(std::size_t begin, std::size_t end) const {
  if (begin > end || end > cols_) {
    throw ShapeError("Mat::col_range: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_str());
  }
  Mat out(rows_, end - begin);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_ + begin), end - begin,
                out.data_.begin() + static_cast<std::ptrdiff_t>(r * out.cols_));
  }
  return out;
}

std::string Mat::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Mat relu(const Mat& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Mat relu_deriv(const Mat& x) {
  return map(x, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Mat signum(const Mat& x) {
  return map(x, [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  Mat out(n, m);
  auto A = a.data();
  auto B = b.data();
  auto C = out.data();
  // i-k-j order: fixed accumulation order per output entry.
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = C.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
  return zip("hadamard", a, b, [](double x, double y) { return x * y; });
}

Mat add(const Mat& a, const Mat& b) {
  return zip("add", a, b, [](double x, double y) { return x + y; });
}

Mat sub(const Mat& a, const Mat& b) {
  return zip("sub", a, b, [](double x, double y) { return x - y; });
}

Mat scale(const Mat& a, double alpha) {
  return map(a, [alpha](double v) { return alpha * v; });
}

Mat abs(const Mat& a) {
  return map(a, [](double v) { return std::fabs(v); });
}

Mat add_bias_cols(const Mat& w, const Mat& b) {
  if (b.cols() != 1 || b.rows() != w.cols()) shape_mismatch("add_bias_cols", w, b);
  Mat out = w;
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) out(r, c) += b(c, 0);
  return out;
}

Mat add_column_vector(const Mat& m, const Mat& b) {
  if (b.cols() != 1 || b.rows() != m.rows()) shape_mismatch("add_column_vector", m, b);
  Mat out = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double br = b(r, 0);
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) += br;
  }
  return out;
}

Mat row_sums(const Mat& m) {
  Mat out(m.rows(), 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (double v : m.row(r)) acc += v;
    out(r, 0) = acc;
  }
  return out;
}

double trace_abs(const Mat& a) {
  if (!a.is_square()) throw ShapeError("trace_abs: matrix is not square: " + a.shape_str());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) acc += std::fabs(a(i, i));
  return acc;
}

double l1_norm(const Mat& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += std::fabs(v);
  return acc;
}

double l2_norm_sq(const Mat& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  return acc;
}

double sum(const Mat& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc;
}

double max_abs(const Mat& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const Mat& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

Mat glorot_like_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t n) {
  if (n == 0) throw ConfigError("glorot_like_init: n must be positive");
  const double s = std::sqrt(1.0 / static_cast<double>(n));
  Mat out(rows, cols);
  for (double& v : out.data()) v = s * rng.normal();
  return out;
}

}  // namespace ncouple
