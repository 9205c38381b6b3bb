#pragma once

#include <span>
#include <vector>

namespace wchaos {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root mean square of y - (slope * x + intercept).
  double rms = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept.  A constant x gives slope 0.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Slopes (y[i+1] - y[i]) / (x[i+1] - x[i]) of consecutive points.
std::vector<double> two_point_slopes(std::span<const double> x, std::span<const double> y);

}  // namespace wchaos
