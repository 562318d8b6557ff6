#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctqw/graph.hpp"

namespace ctqw {

inline constexpr std::size_t kDefaultDenseGuard = 6000;

/// Dense-size limit: CTQW_DENSE_GUARD when set to a positive integer, else 6000.
std::size_t dense_guard_from_env();

/// Compares a 256x256 BLAS dgemm against a plain triple loop. Dense routines
/// throw NumericalError "blas_selfcheck" when this fails.
bool blas_selfcheck();

/// For process entry points: when the self-check fails and OPENBLAS_CORETYPE
/// is unset, re-executes the current binary with OPENBLAS_CORETYPE=Haswell.
/// Returns normally otherwise.
void reexec_if_blas_broken(char** argv);

/// Throws GuardExceeded when n > guard.
void require_dense(std::size_t n, std::size_t guard);

/// Consecutive run of eigenvalues equal within the degeneracy tolerance.
struct DegeneracyGroup {
  std::size_t begin = 0;
  std::size_t size = 0;
  double eigenvalue = 0.0;  // mean of the run
};

/// 1e-8 times the spectral range (max - min); zero for a single eigenvalue.
double degeneracy_tolerance(std::span<const double> ascending);

/// Groups sorted eigenvalues; each value joins the current group while it is
/// within `tol` of the group's first member.
std::vector<DegeneracyGroup> group_degenerate(std::span<const double> ascending, double tol);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]
  std::vector<DegeneracyGroup> groups;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Full symmetric eigendecomposition. Each eigenvector's first component
/// above 1e-12 in magnitude is made positive.
/// Throws ConfigError for non-symmetric input and GuardExceeded above `guard`.
SpectralDecomposition eigh(const Eigen::MatrixXd& matrix, std::size_t guard = dense_guard_from_env());

/// Eigenvalues of a symmetric matrix plus the coefficients <psi_a|p> of a few
/// probe vectors p, without materialising the eigenvectors of the full matrix.
/// Within a degenerate group only group sums of coefficient products are
/// basis independent.
struct ProjectedSpectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd coefficients;  // N x P, row a holds <psi_a|p_j>
  std::vector<DegeneracyGroup> groups;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

ProjectedSpectrum eigh_projected(const Eigen::MatrixXd& matrix, const Eigen::MatrixXd& probes,
                                 std::size_t guard = dense_guard_from_env());

/// Eigenvalue of L together with sum_{k in group} |<w|phi_k>|^2.
struct GroupWeight {
  double eigenvalue = 0.0;
  std::size_t multiplicity = 0;
  double weight = 0.0;
};

/// Inverse-power spectral sums of a Laplacian seen from target w.
struct SpectralSums {
  std::size_t node_count = 0;
  double zeta1 = 0.0;  // sum_{k!=0} 1/E(k)
  double zeta2 = 0.0;  // sum_{k!=0} 1/E(k)^2
  double xi1 = 0.0;    // sum_{k!=0} |a_k|^2/E(k)
  double xi2 = 0.0;    // sum_{k!=0} |a_k|^2/E(k)^2
  double a0_sq = 0.0;  // weight on the zero mode, 1/N for a connected graph
  /// max over nonzero groups of weight/multiplicity: the smallest value of
  /// max_{k!=0} |a_k|^2 attainable by any orthonormal eigenbasis.
  double max_amp_sq = 0.0;
  /// max over nonzero groups of the summed weight.
  double max_group_amp_sq = 0.0;
  /// groups[0] is the zero mode.
  std::vector<GroupWeight> groups;

  /// F(E) = sum_k |a_k|^2 / (gamma E(k) - E).
  double resolvent(double gamma, double energy) const;
  /// F'(E) = sum_k |a_k|^2 / (gamma E(k) - E)^2.
  double resolvent_derivative(double gamma, double energy) const;
};

/// Throws NumericalError when the zero eigenvalue is not simple.
SpectralSums spectral_sums(const SpectralDecomposition& laplacian, NodeId target);
SpectralSums spectral_sums(std::span<const double> eigenvalues, std::span<const double> target_amplitudes,
                           std::span<const DegeneracyGroup> groups);
/// Decomposes the Laplacian of `graph` (projected onto |w>) and evaluates the sums.
SpectralSums spectral_sums(const Graph& graph, NodeId target, std::size_t guard = dense_guard_from_env());

struct AlphaFit {
  double c = 0.0;
  double alpha = 0.0;
  double rms_residual = 0.0;
  /// Set when alpha falls outside [-1, 0).
  bool flagged = false;
  std::vector<double> sizes;
  std::vector<double> max_amp_sq;
};

/// Fits log(max_amp_sq) = log(C) + alpha log(N) over a family of graphs.
/// Throws ConfigError for fewer than three members.
AlphaFit fit_alpha(std::span<const GraphSpec> family, std::span<const NodeId> targets,
                   std::size_t guard = dense_guard_from_env());

/// CSV "index,eigenvalue,multiplicity_group" with 17 significant digits.
void write_spectrum_csv(std::ostream& out, std::span<const double> eigenvalues,
                        std::span<const DegeneracyGroup> groups);

}  // namespace ctqw
