#include "ctqw/spectra.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <string>

#include <unistd.h>

#include "ctqw/error.hpp"
#include "ctqw/io.hpp"
#include "ctqw/regression.hpp"

extern "C" void openblas_set_num_threads(int) __attribute__((weak));
extern "C" void dgemm_(const char* transa, const char* transb, const int* m, const int* n, const int* k,
                       const double* alpha, const double* a, const int* lda, const double* b, const int* ldb,
                       const double* beta, double* c, const int* ldc, std::size_t, std::size_t);

namespace ctqw {

namespace {

// One BLAS thread everywhere: reductions then never depend on the worker count.
void init_blas() {
  static std::once_flag once;
  static bool healthy = true;
  std::call_once(once, [] {
    if (openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
    healthy = blas_selfcheck();
  });
  if (!healthy) {
    throw NumericalError(
        "BLAS self-check failed: dgemm disagrees with a plain product on this CPU; "
        "with OpenBLAS set OPENBLAS_CORETYPE=Haswell",
        "blas_selfcheck");
  }
}

void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ConfigError("matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError("matrix is not symmetric", "not_symmetric");
  }
}

void check_info(lapack_int info, const char* routine) {
  if (info != 0) {
    throw NumericalError(std::string(routine) + " failed with info=" + std::to_string(info), "eigensolver_failure");
  }
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

bool blas_selfcheck() {
  constexpr int n = 256;
  Eigen::MatrixXd a(n, n), b(n, n), c = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      a(i, j) = std::sin(0.37 * i + 1.3 * j);
      b(i, j) = std::cos(0.11 * i - 0.7 * j);
    }
  }
  const double one = 1.0, zero = 0.0;
  dgemm_("N", "N", &n, &n, &n, &one, a.data(), &n, b.data(), &n, &zero, c.data(), &n, 1, 1);
  double err = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += a(i, k) * b(k, j);
      err = std::max(err, std::abs(acc - c(i, j)));
    }
  }
  return err <= 1e-10;
}

void reexec_if_blas_broken(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr || blas_selfcheck()) return;
  ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  ::execv("/proc/self/exe", argv);
}

std::size_t dense_guard_from_env() {
  if (const char* env = std::getenv("CTQW_DENSE_GUARD")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultDenseGuard;
}

void require_dense(std::size_t n, std::size_t guard) {
  if (n > guard) {
    throw GuardExceeded("N=" + std::to_string(n) + " exceeds the dense limit " + std::to_string(guard) +
                        "; use Krylov propagation or raise CTQW_DENSE_GUARD");
  }
}

double degeneracy_tolerance(std::span<const double> ascending) {
  if (ascending.size() < 2) return 0.0;
  return 1e-8 * (ascending.back() - ascending.front());
}

std::vector<DegeneracyGroup> group_degenerate(std::span<const double> ascending, double tol) {
  std::vector<DegeneracyGroup> groups;
  std::size_t i = 0;
  while (i < ascending.size()) {
    std::size_t j = i + 1;
    double sum = ascending[i];
    while (j < ascending.size() && ascending[j] - ascending[i] <= tol) sum += ascending[j++];
    groups.push_back({i, j - i, sum / static_cast<double>(j - i)});
    i = j;
  }
  return groups;
}

SpectralDecomposition eigh(const Eigen::MatrixXd& matrix, std::size_t guard) {
  require_dense(static_cast<std::size_t>(matrix.rows()), guard);
  require_symmetric(matrix);
  init_blas();

  const auto n = static_cast<lapack_int>(matrix.rows());
  SpectralDecomposition dec;
  dec.eigenvectors = matrix;
  dec.eigenvalues.resize(n);
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, dec.eigenvectors.data(), n, dec.eigenvalues.data()),
             "dsyevd");

  for (Eigen::Index k = 0; k < dec.eigenvectors.cols(); ++k) {
    auto col = dec.eigenvectors.col(k);
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
  }
  const auto ev = as_span(dec.eigenvalues);
  dec.groups = group_degenerate(ev, degeneracy_tolerance(ev));
  return dec;
}

ProjectedSpectrum eigh_projected(const Eigen::MatrixXd& matrix, const Eigen::MatrixXd& probes, std::size_t guard) {
  require_dense(static_cast<std::size_t>(matrix.rows()), guard);
  require_symmetric(matrix);
  if (probes.rows() != matrix.rows()) throw ConfigError("probe vectors do not match matrix size");
  init_blas();

  const auto n = static_cast<lapack_int>(matrix.rows());
  const auto p = static_cast<lapack_int>(probes.cols());
  Eigen::MatrixXd a = matrix;
  Eigen::VectorXd diag(n), offdiag(std::max<lapack_int>(n - 1, 1)), tau(std::max<lapack_int>(n - 1, 1));
  check_info(LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, a.data(), n, diag.data(), offdiag.data(), tau.data()),
             "dsytrd");

  // probes expressed in the tridiagonal basis: Q^T p
  Eigen::MatrixXd projected = probes;
  if (n > 1) {
    check_info(LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'T', n, p, a.data(), n, tau.data(), projected.data(), n),
               "dormtr");
  }
  a.resize(0, 0);

  Eigen::MatrixXd z(n, n);
  check_info(LAPACKE_dstedc(LAPACK_COL_MAJOR, 'I', n, diag.data(), offdiag.data(), z.data(), n), "dstedc");

  ProjectedSpectrum out;
  out.eigenvalues = std::move(diag);
  out.coefficients = z.transpose() * projected;
  const auto ev = as_span(out.eigenvalues);
  out.groups = group_degenerate(ev, degeneracy_tolerance(ev));
  return out;
}

double SpectralSums::resolvent(double gamma, double energy) const {
  double f = 0.0;
  for (const auto& g : groups) f += g.weight / (gamma * g.eigenvalue - energy);
  return f;
}

double SpectralSums::resolvent_derivative(double gamma, double energy) const {
  double f = 0.0;
  for (const auto& g : groups) {
    const double d = gamma * g.eigenvalue - energy;
    f += g.weight / (d * d);
  }
  return f;
}

SpectralSums spectral_sums(std::span<const double> eigenvalues, std::span<const double> target_amplitudes,
                           std::span<const DegeneracyGroup> groups) {
  if (eigenvalues.size() != target_amplitudes.size()) throw ConfigError("amplitude count mismatch");
  if (groups.empty() || groups.front().size != 1) {
    throw NumericalError("zero eigenvalue of the Laplacian is not simple (disconnected graph)", "disconnected");
  }
  const double range = eigenvalues.back() - eigenvalues.front();
  if (std::abs(eigenvalues.front()) > 1e-8 * std::max(1.0, range)) {
    throw NumericalError("smallest eigenvalue is not zero; not a Laplacian spectrum", "not_laplacian");
  }

  SpectralSums s;
  s.node_count = eigenvalues.size();
  s.a0_sq = target_amplitudes[0] * target_amplitudes[0];
  s.groups.push_back({0.0, 1, s.a0_sq});
  for (std::size_t gi = 1; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    double weight = 0.0;
    for (std::size_t k = g.begin; k < g.begin + g.size; ++k) {
      weight += target_amplitudes[k] * target_amplitudes[k];
      s.zeta1 += 1.0 / eigenvalues[k];
      s.zeta2 += 1.0 / (eigenvalues[k] * eigenvalues[k]);
    }
    s.xi1 += weight / g.eigenvalue;
    s.xi2 += weight / (g.eigenvalue * g.eigenvalue);
    s.max_group_amp_sq = std::max(s.max_group_amp_sq, weight);
    s.max_amp_sq = std::max(s.max_amp_sq, weight / static_cast<double>(g.size));
    s.groups.push_back({g.eigenvalue, g.size, weight});
  }
  return s;
}

SpectralSums spectral_sums(const SpectralDecomposition& laplacian, NodeId target) {
  if (target.index >= laplacian.size()) throw ConfigError("target node out of range");
  const Eigen::VectorXd amps = laplacian.eigenvectors.row(static_cast<Eigen::Index>(target.index)).transpose();
  return spectral_sums(as_span(laplacian.eigenvalues), as_span(amps), laplacian.groups);
}

SpectralSums spectral_sums(const Graph& graph, NodeId target, std::size_t guard) {
  if (target.index >= graph.size()) throw ConfigError("target node out of range");
  Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graph.size()), 1);
  probe(static_cast<Eigen::Index>(target.index), 0) = 1.0;
  const ProjectedSpectrum ps = eigh_projected(graph.laplacian(), probe, guard);
  const Eigen::VectorXd amps = ps.coefficients.col(0);
  return spectral_sums(as_span(ps.eigenvalues), as_span(amps), ps.groups);
}

AlphaFit fit_alpha(std::span<const GraphSpec> family, std::span<const NodeId> targets, std::size_t guard) {
  if (family.size() != targets.size()) throw ConfigError("fit_alpha: one target per graph required");
  if (family.size() < 3) throw ConfigError("fit_alpha: need at least three sizes", "too_few_points");
  AlphaFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Graph g = build(family[i]);
    const SpectralSums s = spectral_sums(g, targets[i], guard);
    fit.sizes.push_back(static_cast<double>(g.size()));
    fit.max_amp_sq.push_back(s.max_amp_sq);
    lx.push_back(std::log(static_cast<double>(g.size())));
    ly.push_back(std::log(s.max_amp_sq));
  }
  const LineFit line = fit_line(lx, ly);
  fit.alpha = line.slope;
  fit.c = std::exp(line.intercept);
  fit.rms_residual = line.rms_residual;
  fit.flagged = !(fit.alpha >= -1.0 - 1e-9 && fit.alpha < 0.0);
  return fit;
}

void write_spectrum_csv(std::ostream& out, std::span<const double> eigenvalues,
                        std::span<const DegeneracyGroup> groups) {
  out << "index,eigenvalue,multiplicity_group\n";
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t k = groups[gi].begin; k < groups[gi].begin + groups[gi].size; ++k) {
      out << k << ',' << format_real(eigenvalues[k]) << ',' << gi << '\n';
    }
  }
}

}  // namespace ctqw
