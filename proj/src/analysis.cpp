#include "ctqw/analysis.hpp"

#include <cmath>
#include <memory>
#include <ostream>

#include <json.hpp>

#include "ctqw/engine.hpp"
#include "ctqw/error.hpp"
#include "ctqw/parallel.hpp"
#include "ctqw/regression.hpp"

namespace ctqw {

std::string to_string(ScalingModel model) { return model == ScalingModel::PowerLaw ? "power" : "log"; }

ScalingModel scaling_model_from_string(const std::string& name) {
  if (name == "power" || name == "powerlaw" || name == "power-law") return ScalingModel::PowerLaw;
  if (name == "log" || name == "loglaw" || name == "log-law") return ScalingModel::LogLaw;
  throw ConfigError("unknown scaling model '" + name + "'", "invalid_model");
}

ScalingFit fit_scaling(std::span<const ScalingPoint> points, ScalingModel model, Family family) {
  if (points.size() < 3) throw ConfigError("scaling fit needs at least three points", "too_few_points");
  std::vector<double> x, y;
  for (const auto& p : points) {
    if (!(p.gamma_tilde > 0.0)) throw ConfigError("gamma_tilde must be positive", "invalid_point");
    if (model == ScalingModel::PowerLaw) {
      if (!(p.size > 0.0)) throw ConfigError("size must be positive", "invalid_point");
      x.push_back(std::log(p.size));
      y.push_back(std::log(p.gamma_tilde));
    } else {
      x.push_back(p.generation);
      y.push_back(p.gamma_tilde);
    }
  }
  const LineFit line = fit_line(x, y);
  ScalingFit fit;
  fit.family = family;
  fit.model = model;
  fit.points.assign(points.begin(), points.end());
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.residual = line.rms_residual;
  return fit;
}

double exponent_prediction(const GraphSpec& spec, double alpha) {
  const auto ds = spec.spectral_dimension();
  if (!ds) {
    throw ConfigError(to_string(spec.family) + " has no spectral dimension; use the log-law fit",
                      "no_spectral_dimension");
  }
  return alpha + 2.0 / *ds;
}

std::vector<ScalingPoint> critical_gamma_series(std::span<const GraphSpec> specs, std::span<const NodeId> targets,
                                                std::size_t threads, std::size_t guard) {
  if (specs.size() != targets.size()) throw ConfigError("one target per graph required");
  std::vector<ScalingPoint> out(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) {
    auto graph = std::make_shared<const Graph>(build(specs[i]));
    CriticalGammaOptions options;
    options.guard = guard;
    const CriticalGamma cg = critical_gamma(graph, targets[i], options);
    out[i] = {static_cast<double>(graph->size()), static_cast<double>(specs[i].generation), cg.gamma};
  });
  return out;
}

void write_fit_json(std::ostream& out, const ScalingFit& fit) {
  nlohmann::json j;
  j["family"] = to_string(fit.family);
  j["model"] = to_string(fit.model);
  if (fit.model == ScalingModel::PowerLaw) {
    j["params"] = {{"beta", fit.slope}, {"c", std::exp(fit.intercept)}};
  } else {
    j["params"] = {{"a", fit.slope}, {"b", fit.intercept}};
  }
  j["residual"] = fit.residual;
  j["prediction"] = fit.prediction ? nlohmann::json(*fit.prediction) : nlohmann::json(nullptr);
  if (fit.alpha) j["alpha"] = *fit.alpha;
  auto& pts = j["points"] = nlohmann::json::array();
  for (const auto& p : fit.points) pts.push_back({{"N", p.size}, {"g", p.generation}, {"gamma_tilde", p.gamma_tilde}});
  out << j.dump(2) << '\n';
}

}  // namespace ctqw
