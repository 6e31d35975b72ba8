#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include <unistd.h>

#include "ncouple/mat.hpp"
#include "ncouple/model.hpp"
#include "ncouple/rng.hpp"

namespace ncouple::test {

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline Mat random_mat(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

// Central difference of f with respect to m(i, j), restoring the entry.
inline double central_diff(Mat& m, std::size_t i, std::size_t j, const std::function<double()>& f, double h = 1e-6) {
  const double saved = m(i, j);
  m(i, j) = saved + h;
  const double up = f();
  m(i, j) = saved - h;
  const double down = f();
  m(i, j) = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  const double denom = std::max(std::fabs(a), std::fabs(b));
  return denom == 0.0 ? 0.0 : std::fabs(a - b) / denom;
}

// Two-layer model whose ReLUs all stay active on inputs in [0, 1]: positive
// weights, a large encoder bias, and a decoder bias cancelling it exactly.
// The model output is then the linear composition applied to X.
struct LinearRegime {
  ModelParams params;
  Mat mixture;
};

inline LinearRegime linear_regime(std::uint64_t seed, std::size_t n = 8, std::size_t frames = 350) {
  Rng rng(seed);
  const Mat we = random_mat(rng, n, n, 0.05, 0.5);
  const Mat wd = random_mat(rng, n, n, 0.05, 0.5);
  const Mat be(n, 1, 5.0);
  ModelParams p{Arch::dae(), n, {{we, be}, {wd, scale(matmul(wd, be), -1.0)}}};
  return {std::move(p), random_mat(rng, n, frames, 0.0, 1.0)};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ncouple-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ncouple::test
