#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctqw/graph.hpp"
#include "ctqw/spectra.hpp"

namespace ctqw {

/// Graph, marked node w and coupling gamma of H = gamma L - |w><w|.
class SearchProblem {
 public:
  /// Throws ConfigError unless N >= 2, w < N and gamma > 0 (finite).
  SearchProblem(std::shared_ptr<const Graph> graph, NodeId target, double gamma);

  const Graph& graph() const { return *graph_; }
  const std::shared_ptr<const Graph>& graph_ptr() const { return graph_; }
  NodeId target() const { return target_; }
  double gamma() const { return gamma_; }
  std::size_t size() const { return graph_->size(); }

  SearchProblem with_gamma(double gamma) const { return SearchProblem(graph_, target_, gamma); }

 private:
  std::shared_ptr<const Graph> graph_;
  NodeId target_;
  double gamma_;
};

Eigen::MatrixXd build_hamiltonian(const SearchProblem& problem);

/// Spectrum of H together with <psi_a|w> and <psi_a|s> for every eigenstate.
struct SearchSpectrum {
  Eigen::VectorXd energies;
  Eigen::VectorXd target_coeff;
  Eigen::VectorXd uniform_coeff;
  std::vector<DegeneracyGroup> groups;

  /// <w| exp(-iHt) |s>
  std::complex<double> amplitude(double t) const;
  /// |<w| exp(-iHt) |s>|^2 clamped to [0, 1].
  double success(double t) const;
};

SearchSpectrum search_spectrum(const SearchProblem& problem, std::size_t guard = dense_guard_from_env());

/// Full state exp(-iHt)|s> from a complete eigendecomposition.
Eigen::VectorXcd evolve_uniform_state(const SearchProblem& problem, double t,
                                      std::size_t guard = dense_guard_from_env());

struct OverlapRecord {
  double gamma = 0.0;
  double s_psi0_sq = 0.0;
  double s_psi1_sq = 0.0;
  double w_psi0_sq = 0.0;
  double w_psi1_sq = 0.0;
  double e0 = 0.0;
  double e1 = 0.0;
  /// psi_1 spans a degenerate eigenspace; overlaps are summed over it.
  bool degenerate_e1 = false;
};

OverlapRecord overlaps(const SearchProblem& problem, std::size_t guard = dense_guard_from_env());
OverlapRecord overlaps(const SearchSpectrum& spectrum, double gamma);

/// One record per gamma, computed in parallel (threads = 0 uses all cores).
std::vector<OverlapRecord> overlap_sweep(std::shared_ptr<const Graph> graph, NodeId target,
                                         std::span<const double> gammas, std::size_t threads = 0,
                                         std::size_t guard = dense_guard_from_env());

/// CSV "gamma,sPsi0Sq,sPsi1Sq,wPsi0Sq,wPsi1Sq,E0,E1,degenerateE1".
void write_overlap_csv(std::ostream& out, std::span<const OverlapRecord> records);

struct CriticalGamma {
  double gamma = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// |sPsi0Sq - sPsi1Sq| at gamma.
  double residual = 0.0;
  /// xi_1 of the target, where the bracket search starts.
  double seed = 0.0;
  std::size_t evaluations = 0;
  /// Every root located; more than one only when the sign of
  /// sPsi0Sq - sPsi1Sq was seen to change more than once.
  std::vector<double> roots;
};

struct CriticalGammaOptions {
  double lower_limit = 1e-6;
  double upper_limit = 1e6;
  double expansion = 2.0;
  double relative_width = 1e-9;
  double max_residual = 1e-6;
  std::size_t guard = dense_guard_from_env();
};

/// Root of sPsi0Sq(gamma) - sPsi1Sq(gamma) by bracketed bisection.
/// Throws NumericalError("no_transition") when no sign change is found in
/// [lower_limit, upper_limit].
CriticalGamma critical_gamma(std::shared_ptr<const Graph> graph, NodeId target, const CriticalGammaOptions& options = {});

double success_probability(const SearchProblem& problem, double t, std::size_t guard = dense_guard_from_env());

/// pi(gamma, t) sampled on a rectangular grid; rows are gamma values.
struct SuccessGrid {
  std::vector<double> gammas;
  std::vector<double> times;
  std::vector<double> values;  // row-major, gammas.size() x times.size()
  std::vector<double> peak_time;
  std::vector<double> peak_value;

  double at(std::size_t gi, std::size_t ti) const { return values[gi * times.size() + ti]; }
  std::span<const double> row(std::size_t gi) const { return {values.data() + gi * times.size(), times.size()}; }
};

/// One eigendecomposition per gamma, reused for every t; rows run in parallel.
SuccessGrid success_grid(std::shared_ptr<const Graph> graph, NodeId target, std::span<const double> gammas,
                         std::span<const double> times, std::size_t threads = 0,
                         std::size_t guard = dense_guard_from_env());

/// Matrix form: first row "gamma/t" then the t values; first column gamma.
void write_grid_matrix_csv(std::ostream& out, const SuccessGrid& grid);
/// Long form "gamma,t,pi".
void write_grid_long_csv(std::ostream& out, const SuccessGrid& grid);

/// 512 points on [0, 4 pi sqrt(N)].
std::vector<double> default_time_grid(std::size_t node_count);
std::vector<double> linear_grid(double lo, double hi, std::size_t count);
std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// gamma maximising max_t pi(gamma, t) over the given time grid (the horizon).
struct GammaMax {
  double gamma = 0.0;
  double peak_time = 0.0;
  double peak_value = 0.0;
  double horizon = 0.0;
};

/// Coarse 64-point log grid on [gamma_tilde/10, 10 gamma_tilde], then
/// golden-section refinement around the best coarse point.
GammaMax find_gamma_max(std::shared_ptr<const Graph> graph, NodeId target, double gamma_tilde,
                        std::span<const double> times, std::size_t threads = 0,
                        std::size_t guard = dense_guard_from_env());

/// Distance between the first two interior local maxima of `values`, each
/// refined by a parabola through its neighbours. Requires a uniform grid.
std::optional<double> oscillation_period(std::span<const double> times, std::span<const double> values);

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string note;
};

struct BoundReport {
  double gamma = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
  std::size_t node_count = 0;
  bool at_transition = false;
  OverlapRecord overlap;
  std::vector<BoundCheck> checks;

  bool all_passed() const;
};

/// Checks the ground/first-excited overlap bounds, the |E0| bracket, the
/// secular condition F(E_a) = 1 and |<s|psi_a>|^2 = R_a/(N E_a^2) at one gamma.
BoundReport verify_bounds(std::shared_ptr<const Graph> graph, NodeId target, double gamma,
                          std::size_t guard = dense_guard_from_env());
/// Same, reusing precomputed Laplacian sums for the target.
BoundReport verify_bounds(const SpectralSums& sums, std::shared_ptr<const Graph> graph, NodeId target, double gamma,
                          std::size_t guard = dense_guard_from_env());

void write_bound_report(std::ostream& out, const BoundReport& report);

struct KrylovOptions {
  std::size_t subspace_dim = 30;
  /// Per-step bound on the estimated local error.
  double step_tolerance = 1e-12;
  std::size_t max_steps = 1000000;
};

/// pi(t) at ascending non-negative times via Lanczos approximations of
/// exp(-iH tau) with adaptive step size; only sparse matrix-vector products.
std::vector<double> propagate_krylov(const Graph& graph, NodeId target, double gamma, std::span<const double> times,
                                     const KrylovOptions& options = {});

}  // namespace ctqw
