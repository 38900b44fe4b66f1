#pragma once

#include <vector>

namespace transglasso {

/// Candidate penalties, strictly decreasing and positive.
struct TuningGrid {
  std::vector<double> values;

  /// `count` log-spaced values from `lambda_max` down to lambda_max * min_ratio.
  static TuningGrid log_spaced(double lambda_max, double min_ratio = 1e-3, int count = 30);

  /// Throws ConfigError when empty, non-positive or not strictly decreasing.
  void validate() const;
};

}  // namespace transglasso
