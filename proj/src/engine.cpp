#include "ctqw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "ctqw/error.hpp"
#include "ctqw/io.hpp"
#include "ctqw/parallel.hpp"

namespace ctqw {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double group_sum_sq(const Eigen::VectorXd& coeff, const DegeneracyGroup& g) {
  return coeff.segment(static_cast<Eigen::Index>(g.begin), static_cast<Eigen::Index>(g.size)).squaredNorm();
}

std::shared_ptr<const Graph> require_graph(std::shared_ptr<const Graph> graph) {
  if (!graph) throw ConfigError("no graph given");
  return graph;
}

}  // namespace

SearchProblem::SearchProblem(std::shared_ptr<const Graph> graph, NodeId target, double gamma)
    : graph_(require_graph(std::move(graph))), target_(target), gamma_(gamma) {
  if (graph_->size() < 2) throw ConfigError("search needs at least two nodes");
  if (target.index >= graph_->size()) {
    throw ConfigError("target node " + std::to_string(target.index) + " out of range", "invalid_target");
  }
  if (!std::isfinite(gamma) || gamma <= 0.0) throw ConfigError("gamma must be positive", "invalid_gamma");
}

Eigen::MatrixXd build_hamiltonian(const SearchProblem& problem) {
  Eigen::MatrixXd h = problem.gamma() * problem.graph().laplacian();
  const auto w = static_cast<Eigen::Index>(problem.target().index);
  h(w, w) -= 1.0;
  return h;
}

std::complex<double> SearchSpectrum::amplitude(double t) const {
  double re = 0.0, im = 0.0;
  for (Eigen::Index a = 0; a < energies.size(); ++a) {
    const double c = target_coeff(a) * uniform_coeff(a);
    const double phase = energies(a) * t;
    re += c * std::cos(phase);
    im -= c * std::sin(phase);
  }
  return {re, im};
}

double SearchSpectrum::success(double t) const { return std::clamp(std::norm(amplitude(t)), 0.0, 1.0); }

SearchSpectrum search_spectrum(const SearchProblem& problem, std::size_t guard) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  Eigen::MatrixXd probes(n, 2);
  probes.col(0).setZero();
  probes(static_cast<Eigen::Index>(problem.target().index), 0) = 1.0;
  probes.col(1).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  ProjectedSpectrum ps = eigh_projected(build_hamiltonian(problem), probes, guard);
  SearchSpectrum out;
  out.energies = std::move(ps.eigenvalues);
  out.target_coeff = ps.coefficients.col(0);
  out.uniform_coeff = ps.coefficients.col(1);
  out.groups = std::move(ps.groups);
  return out;
}

Eigen::VectorXcd evolve_uniform_state(const SearchProblem& problem, double t, std::size_t guard) {
  const SpectralDecomposition dec = eigh(build_hamiltonian(problem), guard);
  const auto n = static_cast<Eigen::Index>(problem.size());
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const Eigen::VectorXd c = dec.eigenvectors.transpose() * s;
  Eigen::VectorXcd phased(n);
  for (Eigen::Index a = 0; a < n; ++a) phased(a) = c(a) * std::polar(1.0, -dec.eigenvalues(a) * t);
  return dec.eigenvectors.cast<std::complex<double>>() * phased;
}

OverlapRecord overlaps(const SearchSpectrum& spectrum, double gamma) {
  if (spectrum.groups.size() < 2) throw NumericalError("search Hamiltonian has a single eigenvalue");
  const DegeneracyGroup& g0 = spectrum.groups[0];
  const DegeneracyGroup& g1 = spectrum.groups[1];
  OverlapRecord r;
  r.gamma = gamma;
  r.s_psi0_sq = group_sum_sq(spectrum.uniform_coeff, g0);
  r.s_psi1_sq = group_sum_sq(spectrum.uniform_coeff, g1);
  r.w_psi0_sq = group_sum_sq(spectrum.target_coeff, g0);
  r.w_psi1_sq = group_sum_sq(spectrum.target_coeff, g1);
  r.e0 = g0.eigenvalue;
  r.e1 = g1.eigenvalue;
  r.degenerate_e1 = g1.size > 1;
  return r;
}

OverlapRecord overlaps(const SearchProblem& problem, std::size_t guard) {
  return overlaps(search_spectrum(problem, guard), problem.gamma());
}

std::vector<OverlapRecord> overlap_sweep(std::shared_ptr<const Graph> graph, NodeId target,
                                         std::span<const double> gammas, std::size_t threads, std::size_t guard) {
  std::vector<SearchProblem> problems;
  problems.reserve(gammas.size());
  for (double g : gammas) problems.emplace_back(graph, target, g);
  std::vector<OverlapRecord> out(gammas.size());
  parallel_for(gammas.size(), threads, [&](std::size_t i) { out[i] = overlaps(problems[i], guard); });
  return out;
}

void write_overlap_csv(std::ostream& out, std::span<const OverlapRecord> records) {
  out << "gamma,sPsi0Sq,sPsi1Sq,wPsi0Sq,wPsi1Sq,E0,E1,degenerateE1\n";
  for (const auto& r : records) {
    out << format_real(r.gamma) << ',' << format_real(r.s_psi0_sq) << ',' << format_real(r.s_psi1_sq) << ','
        << format_real(r.w_psi0_sq) << ',' << format_real(r.w_psi1_sq) << ',' << format_real(r.e0) << ','
        << format_real(r.e1) << ',' << (r.degenerate_e1 ? "true" : "false") << '\n';
  }
}

CriticalGamma critical_gamma(std::shared_ptr<const Graph> graph, NodeId target, const CriticalGammaOptions& options) {
  graph = require_graph(std::move(graph));
  if (!(options.lower_limit > 0.0 && options.upper_limit > options.lower_limit && options.expansion > 1.0)) {
    throw ConfigError("invalid critical gamma search limits");
  }
  const SpectralSums sums = spectral_sums(*graph, target, options.guard);

  CriticalGamma out;
  out.seed = sums.xi1;
  std::map<double, double> visited;
  auto f = [&](double gamma) {
    if (auto it = visited.find(gamma); it != visited.end()) return it->second;
    const OverlapRecord r = overlaps(SearchProblem(graph, target, gamma), options.guard);
    ++out.evaluations;
    const double v = r.s_psi0_sq - r.s_psi1_sq;
    visited.emplace(gamma, v);
    return v;
  };
  auto no_transition = [&] {
    return NumericalError("no sign change of sPsi0Sq - sPsi1Sq in [" + format_real(options.lower_limit) + ", " +
                              format_real(options.upper_limit) + "]",
                          "no_transition");
  };

  const double start = std::clamp(sums.xi1, options.lower_limit, options.upper_limit);
  const int s0 = sign_of(f(start));
  if (s0 > 0) {
    double g = start;
    while (sign_of(f(g)) > 0) {
      g /= options.expansion;
      if (g < options.lower_limit) throw no_transition();
    }
    // one step past the bracket to expose a second crossing
    if (g / options.expansion >= options.lower_limit) f(g / options.expansion);
  } else if (s0 < 0) {
    double g = start;
    while (sign_of(f(g)) < 0) {
      g *= options.expansion;
      if (g > options.upper_limit) throw no_transition();
    }
    if (g * options.expansion <= options.upper_limit) f(g * options.expansion);
  }

  auto bisect = [&](double lo, double hi) {
    const int slo = sign_of(f(lo));
    while (hi - lo > options.relative_width * lo) {
      const double mid = 0.5 * (lo + hi);
      const int sm = sign_of(f(mid));
      if (sm == 0) return std::pair{mid, mid};
      (sm == slo ? lo : hi) = mid;
    }
    return std::pair{lo, hi};
  };

  // Brackets from every adjacent sign change among the sampled points.
  std::vector<std::pair<double, double>> brackets;
  std::vector<std::pair<double, double>> samples(visited.begin(), visited.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (sign_of(samples[i].second) == 0) {
      brackets.emplace_back(samples[i].first, samples[i].first);
    } else if (i + 1 < samples.size() && sign_of(samples[i].second) * sign_of(samples[i + 1].second) < 0) {
      brackets.emplace_back(samples[i].first, samples[i + 1].first);
    }
  }
  if (brackets.empty()) throw no_transition();

  std::size_t primary = 0;
  for (std::size_t i = 0; i < brackets.size(); ++i) {
    const auto [lo, hi] = brackets[i].first == brackets[i].second ? brackets[i] : bisect(brackets[i].first, brackets[i].second);
    out.roots.push_back(0.5 * (lo + hi));
    if (std::abs(std::log(out.roots.back() / start)) < std::abs(std::log(out.roots[primary] / start))) primary = i;
    brackets[i] = {lo, hi};
  }
  out.lo = brackets[primary].first;
  out.hi = brackets[primary].second;
  out.gamma = out.roots[primary];
  out.residual = std::abs(f(out.gamma));
  if (out.residual > options.max_residual) {
    throw NumericalError("sPsi0Sq - sPsi1Sq jumps at gamma=" + format_real(out.gamma) +
                             " (residual " + format_real(out.residual) + ")",
                         "discontinuous_transition");
  }
  return out;
}

double success_probability(const SearchProblem& problem, double t, std::size_t guard) {
  return search_spectrum(problem, guard).success(t);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("grid needs at least one point");
  if (!(std::isfinite(lo) && std::isfinite(hi) && hi >= lo)) throw ConfigError("invalid grid range");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi > 0.0)) throw ConfigError("log grid needs positive bounds");
  std::vector<double> out = linear_grid(std::log(lo), std::log(hi), count);
  for (double& v : out) v = std::exp(v);
  out.front() = lo;
  if (count > 1) out.back() = hi;
  return out;
}

std::vector<double> default_time_grid(std::size_t node_count) {
  return linear_grid(0.0, 4.0 * std::numbers::pi * std::sqrt(static_cast<double>(node_count)), 512);
}

SuccessGrid success_grid(std::shared_ptr<const Graph> graph, NodeId target, std::span<const double> gammas,
                         std::span<const double> times, std::size_t threads, std::size_t guard) {
  SuccessGrid grid;
  grid.gammas.assign(gammas.begin(), gammas.end());
  grid.times.assign(times.begin(), times.end());
  if (times.empty()) throw ConfigError("time grid is empty");
  std::vector<SearchProblem> problems;
  problems.reserve(gammas.size());
  for (double g : gammas) problems.emplace_back(graph, target, g);
  grid.values.resize(gammas.size() * times.size());
  grid.peak_time.resize(gammas.size());
  grid.peak_value.resize(gammas.size());
  parallel_for(gammas.size(), threads, [&](std::size_t gi) {
    const SearchSpectrum sp = search_spectrum(problems[gi], guard);
    double* row = grid.values.data() + gi * times.size();
    std::size_t best = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      row[ti] = sp.success(times[ti]);
      if (row[ti] > row[best]) best = ti;
    }
    grid.peak_time[gi] = times[best];
    grid.peak_value[gi] = row[best];
  });
  return grid;
}

void write_grid_matrix_csv(std::ostream& out, const SuccessGrid& grid) {
  out << "gamma/t";
  for (double t : grid.times) out << ',' << format_real(t);
  out << '\n';
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    out << format_real(grid.gammas[gi]);
    for (double v : grid.row(gi)) out << ',' << format_real(v);
    out << '\n';
  }
}

void write_grid_long_csv(std::ostream& out, const SuccessGrid& grid) {
  out << "gamma,t,pi\n";
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    for (std::size_t ti = 0; ti < grid.times.size(); ++ti) {
      out << format_real(grid.gammas[gi]) << ',' << format_real(grid.times[ti]) << ','
          << format_real(grid.at(gi, ti)) << '\n';
    }
  }
}

GammaMax find_gamma_max(std::shared_ptr<const Graph> graph, NodeId target, double gamma_tilde,
                        std::span<const double> times, std::size_t threads, std::size_t guard) {
  if (!(gamma_tilde > 0.0)) throw ConfigError("gamma_tilde must be positive");
  if (times.empty()) throw ConfigError("time grid is empty");

  const std::vector<double> coarse = log_grid(gamma_tilde / 10.0, gamma_tilde * 10.0, 64);
  const SuccessGrid grid = success_grid(graph, target, coarse, times, threads, guard);

  GammaMax best;
  best.horizon = times.back();
  std::size_t bi = 0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (grid.peak_value[i] > grid.peak_value[bi]) bi = i;
  }
  best.gamma = coarse[bi];
  best.peak_time = grid.peak_time[bi];
  best.peak_value = grid.peak_value[bi];

  auto evaluate = [&](double log_gamma) {
    const double g = std::exp(log_gamma);
    const SearchSpectrum sp = search_spectrum(SearchProblem(graph, target, g), guard);
    double pv = -1.0, pt = 0.0;
    for (double t : times) {
      const double v = sp.success(t);
      if (v > pv) {
        pv = v;
        pt = t;
      }
    }
    if (pv > best.peak_value) best = {g, pt, pv, best.horizon};
    return pv;
  };

  double a = std::log(coarse[bi == 0 ? 0 : bi - 1]);
  double b = std::log(coarse[std::min(bi + 1, coarse.size() - 1)]);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = evaluate(c);
  double fd = evaluate(d);
  while (b - a > 1e-5) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = evaluate(d);
    }
  }
  return best;
}

std::optional<double> oscillation_period(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw ConfigError("times and values differ in length");
  if (times.size() < 3) return std::nullopt;
  const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < values.size() && peaks.size() < 2; ++i) {
    if (values[i] > values[i - 1] && values[i] >= values[i + 1]) {
      const double curv = values[i - 1] - 2.0 * values[i] + values[i + 1];
      const double shift = curv != 0.0 ? 0.5 * (values[i - 1] - values[i + 1]) / curv : 0.0;
      peaks.push_back(times[i] + shift * h);
    }
  }
  if (peaks.size() < 2) return std::nullopt;
  return peaks[1] - peaks[0];
}

bool BoundReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.passed; });
}

BoundReport verify_bounds(std::shared_ptr<const Graph> graph, NodeId target, double gamma, std::size_t guard) {
  graph = require_graph(std::move(graph));
  return verify_bounds(spectral_sums(*graph, target, guard), graph, target, gamma, guard);
}

BoundReport verify_bounds(const SpectralSums& sums, std::shared_ptr<const Graph> graph, NodeId target, double gamma,
                          std::size_t guard) {
  const SearchProblem problem(std::move(graph), target, gamma);
  const SearchSpectrum sp = search_spectrum(problem, guard);
  BoundReport r;
  r.gamma = gamma;
  r.xi1 = sums.xi1;
  r.xi2 = sums.xi2;
  r.node_count = problem.size();
  r.at_transition = gamma == sums.xi1;
  r.overlap = overlaps(sp, gamma);
  const OverlapRecord& ov = r.overlap;
  const double n = static_cast<double>(r.node_count);
  constexpr double slack = 1e-12;

  auto check = [&](std::string name, double value, double lower, double upper) {
    const bool ok = value >= lower - slack && value <= upper + slack;
    r.checks.push_back({std::move(name), value, lower, upper, ok, false, {}});
  };
  auto skip = [&](std::string name, std::string note) {
    r.checks.push_back({std::move(name), 0.0, 0.0, 0.0, true, true, std::move(note)});
  };

  const double dxi = gamma - sums.xi1;
  if (r.at_transition) {
    skip("ground_overlap", "at transition");
    skip("ground_energy", "at transition");
    skip("excited_overlap", "at transition");
    skip("excited_energy", "at transition");
  } else if (dxi > 0.0) {
    check("ground_overlap", ov.s_psi0_sq, 1.0 - sums.xi2 / (n * dxi * dxi), 1.0);
    check("ground_energy", std::abs(ov.e0), 1.0 / n, gamma / (n * dxi));
    skip("excited_overlap", "gamma above xi1");
    skip("excited_energy", "gamma above xi1");
  } else {
    skip("ground_overlap", "gamma below xi1");
    skip("ground_energy", "gamma below xi1");
    if (ov.degenerate_e1) {
      skip("excited_overlap", "degenerate first excited level");
    } else {
      check("excited_overlap", ov.s_psi1_sq, 1.0 - sums.xi2 / (n * dxi * dxi), 1.0);
    }
    check("excited_energy", ov.e1, 0.0, gamma / (n * -dxi));
  }

  // Secular route: F(E_a) = 1 and the residues R_a = 1/F'(E_a).
  const struct {
    const char* tag;
    double energy, s_sq, w_sq;
    bool degenerate;
  } levels[] = {{"E0", ov.e0, ov.s_psi0_sq, ov.w_psi0_sq, false},
                {"E1", ov.e1, ov.s_psi1_sq, ov.w_psi1_sq, ov.degenerate_e1}};
  for (const auto& lv : levels) {
    const std::string tag = lv.tag;
    if (lv.degenerate) {
      skip("secular_" + tag, "degenerate level");
      skip("residue_" + tag, "degenerate level");
      skip("s_overlap_" + tag, "degenerate level");
      continue;
    }
    if (lv.w_sq < 1e-14) {
      skip("secular_" + tag, "level is orthogonal to the target");
      skip("residue_" + tag, "level is orthogonal to the target");
      skip("s_overlap_" + tag, "level is orthogonal to the target");
      continue;
    }
    const double f = sums.resolvent(gamma, lv.energy);
    const double residue = 1.0 / sums.resolvent_derivative(gamma, lv.energy);
    check("secular_" + tag, std::abs(f - 1.0), 0.0, 1e-6);
    check("residue_" + tag, std::abs(lv.w_sq - residue), 0.0, 1e-8);
    check("s_overlap_" + tag, std::abs(lv.s_sq - residue / (n * lv.energy * lv.energy)), 0.0, 1e-8);
  }
  return r;
}

void write_bound_report(std::ostream& out, const BoundReport& report) {
  nlohmann::json j;
  j["gamma"] = report.gamma;
  j["xi1"] = report.xi1;
  j["xi2"] = report.xi2;
  j["N"] = report.node_count;
  j["at_transition"] = report.at_transition;
  j["E0"] = report.overlap.e0;
  j["E1"] = report.overlap.e1;
  j["sPsi0Sq"] = report.overlap.s_psi0_sq;
  j["sPsi1Sq"] = report.overlap.s_psi1_sq;
  j["degenerateE1"] = report.overlap.degenerate_e1;
  j["passed"] = report.all_passed();
  auto& checks = j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    nlohmann::json e{{"name", c.name}, {"passed", c.passed}, {"skipped", c.skipped}};
    if (c.skipped) {
      e["note"] = c.note;
    } else {
      e["value"] = c.value;
      e["lower"] = c.lower;
      e["upper"] = c.upper;
    }
    checks.push_back(std::move(e));
  }
  out << j.dump(2) << '\n';
}

}  // namespace ctqw
