#pragma once

#include <vector>

namespace softaug {

/// Smoothed target: the true class keeps `confidence`, every other class gets
/// (1 - confidence) / (class_count - 1).
struct SoftLabel {
  int class_count = 2;
  int true_class = 0;
  double confidence = 1.0;
  double loss_weight = 1.0;

  double off_target() const noexcept { return (1.0 - confidence) / (class_count - 1); }
  std::vector<double> dense() const;
};

/// Confidence below chance is allowed (and logged at debug level); the vector stays a distribution.
SoftLabel soft_target(int true_class, int class_count, double confidence, bool reweight = false);

/// The confidence itself when reweighting, else 1.
double loss_weight(double confidence, bool reweight);

/// Classic label smoothing with a fixed mass alpha moved off the true class.
SoftLabel fixed_label_smoothing(int true_class, int class_count, double alpha = 0.1);

}  // namespace softaug
