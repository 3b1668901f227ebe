#include "stann/nn/optimizer.hpp"

#include <cmath>

#include "stann/errors.hpp"

namespace stann {

void adam_update(Eigen::Map<Eigen::VectorXd> value, const Eigen::Map<const Eigen::VectorXd> grad,
                 AdamSlot& slot, const AdamHyper& hyper, long t) {
  if (t < 1) throw ArgumentError("adam: step count must start at 1");
  if (slot.m.size() != value.size()) {
    slot.m = Eigen::VectorXd::Zero(value.size());
    slot.v = Eigen::VectorXd::Zero(value.size());
  }
  slot.m = hyper.beta1 * slot.m + (1.0 - hyper.beta1) * grad;
  slot.v = hyper.beta2 * slot.v.array() + (1.0 - hyper.beta2) * grad.array().square();
  const double mc = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double vc = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  value.array() -=
      hyper.lr * (slot.m.array() / mc) / ((slot.v.array() / vc).sqrt() + hyper.eps);
}

void sgd_update(Eigen::Map<Eigen::VectorXd> value, const Eigen::Map<const Eigen::VectorXd> grad,
                double lr) {
  value -= lr * grad;
}

AdamSlot& AdamState::slot(const std::string& key, Eigen::Index size) {
  AdamSlot& s = slots_[key];
  if (s.m.size() != size) {
    s.m = Eigen::VectorXd::Zero(size);
    s.v = Eigen::VectorXd::Zero(size);
  }
  return s;
}

}  // namespace stann
