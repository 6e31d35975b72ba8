#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncouple/mat.hpp"

namespace ncouple {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Mat> first_moment;
  std::vector<Mat> second_moment;
};

// Bias-corrected Adam update applied in place to *params[i] using grads[i].
// Moments are lazily shaped on the first call. Throws NumericError on a
// non-finite gradient (before touching any state) and ShapeError on mismatch.
void adam_step(AdamState& state, std::span<Mat* const> params, std::span<const Mat> grads);

}  // namespace ncouple
