#pragma once

#include <map>
#include <string>

#include <Eigen/Core>

namespace stann {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamSlot {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

// Bias-corrected Adam step on one flat parameter vector; t counts completed
// steps starting at 1.
void adam_update(Eigen::Map<Eigen::VectorXd> value, const Eigen::Map<const Eigen::VectorXd> grad,
                 AdamSlot& slot, const AdamHyper& hyper, long t);

void sgd_update(Eigen::Map<Eigen::VectorXd> value, const Eigen::Map<const Eigen::VectorXd> grad,
                double lr);

// Per-parameter moment store keyed by block/param name. Keys are ordered so
// serialization is deterministic.
class AdamState {
 public:
  AdamHyper hyper;
  long t = 0;

  AdamSlot& slot(const std::string& key, Eigen::Index size);
  const std::map<std::string, AdamSlot>& slots() const { return slots_; }
  std::map<std::string, AdamSlot>& slots() { return slots_; }

 private:
  std::map<std::string, AdamSlot> slots_;
};

}  // namespace stann
