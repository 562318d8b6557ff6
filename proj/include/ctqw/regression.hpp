#pragma once

#include <span>

namespace ctqw {

/// Unweighted least-squares line y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual in the fitted coordinates.
  double rms_residual = 0.0;
};

/// Requires at least two points with distinct x; throws ConfigError otherwise.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace ctqw
