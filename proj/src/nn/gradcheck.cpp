#include "stann/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stann/errors.hpp"

namespace stann {

GradCheckResult grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           const std::vector<ParamRef>& params, double epsilon,
                           long max_coords, Rng& rng) {
  const double first = loss_fn();
  const double second = loss_fn();
  if (!(first == second)) {
    throw NumericError("grad check: loss does not replay deterministically (" +
                       std::to_string(first) + " vs " + std::to_string(second) + ")");
  }
  if (!std::isfinite(first)) throw NumericError("grad check: non-finite loss");

  grad_fn();

  long total = 0;
  for (const auto& p : params) total += p.size;
  std::vector<std::pair<std::size_t, long>> coords;  // (param index, coordinate)
  if (total <= max_coords) {
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      for (long c = 0; c < params[pi].size; ++c) coords.emplace_back(pi, c);
    }
  } else {
    // Sample without replacement over the flat coordinate space.
    std::vector<long> flat(static_cast<std::size_t>(total));
    for (long i = 0; i < total; ++i) flat[static_cast<std::size_t>(i)] = i;
    rng.shuffle(flat);
    flat.resize(static_cast<std::size_t>(max_coords));
    std::sort(flat.begin(), flat.end());
    std::size_t pi = 0;
    long offset = 0;
    for (long f : flat) {
      while (f - offset >= params[pi].size) {
        offset += params[pi].size;
        ++pi;
      }
      coords.emplace_back(pi, f - offset);
    }
  }

  GradCheckResult result;
  for (const auto& [pi, c] : coords) {
    const ParamRef& p = params[pi];
    const double saved = p.value[c];
    p.value[c] = saved + epsilon;
    const double up = loss_fn();
    p.value[c] = saved - epsilon;
    const double down = loss_fn();
    p.value[c] = saved;

    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = p.grad[c];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    ++result.checked;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = p.name + "[" + std::to_string(c) + "]";
    }
  }
  return result;
}

}  // namespace stann
