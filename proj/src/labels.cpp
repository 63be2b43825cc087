#include "softaug/labels.hpp"

#include <spdlog/spdlog.h>

#include <string>

#include "softaug/errors.hpp"

namespace softaug {

std::vector<double> SoftLabel::dense() const {
  std::vector<double> v(static_cast<std::size_t>(class_count), off_target());
  v[static_cast<std::size_t>(true_class)] = confidence;
  return v;
}

SoftLabel soft_target(int true_class, int class_count, double confidence, bool reweight) {
  if (class_count < 2) throw ContractViolation("class_count must be at least 2");
  if (true_class < 0 || true_class >= class_count) {
    throw ContractViolation("class index " + std::to_string(true_class) + " outside [0, " +
                            std::to_string(class_count) + ")");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw ContractViolation("confidence must lie in [0, 1], got " + std::to_string(confidence));
  }
  if (confidence < 1.0 / class_count) {
    spdlog::debug("confidence {} is below chance for {} classes", confidence, class_count);
  }
  return SoftLabel{class_count, true_class, confidence, loss_weight(confidence, reweight)};
}

double loss_weight(double confidence, bool reweight) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw ContractViolation("confidence must lie in [0, 1]");
  }
  return reweight ? confidence : 1.0;
}

SoftLabel fixed_label_smoothing(int true_class, int class_count, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ContractViolation("alpha must lie in [0, 1)");
  return soft_target(true_class, class_count, 1.0 - alpha);
}

}  // namespace softaug
