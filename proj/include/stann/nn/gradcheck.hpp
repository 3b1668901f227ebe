#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stann/rng.hpp"

namespace stann {

// Named view into a flat parameter (or gradient) buffer owned elsewhere.
struct ParamRef {
  std::string name;
  std::vector<int> shape;
  double* value = nullptr;
  double* grad = nullptr;
  long size = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  long checked = 0;
  std::string worst;  // "param[index]" of the largest relative error
};

// Central-difference check of analytic gradients. `loss_fn` must be a pure
// re-evaluation of the loss; `grad_fn` must populate every ParamRef's grad
// buffer. The loss is evaluated twice up front and must replay bit-identically,
// otherwise a NumericError is thrown. At most `max_coords` coordinates are
// probed, sampled without replacement when the parameter count is larger.
// Relative error is |a - n| / max(|a|, |n|, 1e-4).
GradCheckResult grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           const std::vector<ParamRef>& params, double epsilon,
                           long max_coords, Rng& rng);

}  // namespace stann
