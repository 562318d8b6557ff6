#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctqw/graph.hpp"
#include "ctqw/spectra.hpp"

namespace ctqw {

enum class ScalingModel {
  PowerLaw,  // gamma_tilde = c N^beta, fitted in log-log
  LogLaw,    // gamma_tilde = a g + b
};

std::string to_string(ScalingModel model);
ScalingModel scaling_model_from_string(const std::string& name);

struct ScalingPoint {
  double size = 0.0;
  double generation = 0.0;
  double gamma_tilde = 0.0;
};

struct ScalingFit {
  Family family = Family::Complete;
  ScalingModel model = ScalingModel::PowerLaw;
  std::vector<ScalingPoint> points;
  /// PowerLaw: beta and ln c. LogLaw: a and b.
  double slope = 0.0;
  double intercept = 0.0;
  /// RMS residual in the fitted coordinates.
  double residual = 0.0;
  std::optional<double> prediction;
  std::optional<double> alpha;
};

/// Unweighted least squares; needs >= 3 points and positive gamma_tilde.
ScalingFit fit_scaling(std::span<const ScalingPoint> points, ScalingModel model, Family family = Family::Complete);

/// alpha + 2/d_s. Throws ConfigError("no_spectral_dimension") for families
/// without a spectral dimension (Cayley tree, complete graph).
double exponent_prediction(const GraphSpec& spec, double alpha);

/// Critical gamma for each spec (rows computed in parallel).
std::vector<ScalingPoint> critical_gamma_series(std::span<const GraphSpec> specs, std::span<const NodeId> targets,
                                                std::size_t threads = 0, std::size_t guard = dense_guard_from_env());

/// {family, model, params, residual, prediction}
void write_fit_json(std::ostream& out, const ScalingFit& fit);

}  // namespace ctqw
