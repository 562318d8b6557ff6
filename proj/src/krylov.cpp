#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "ctqw/engine.hpp"
#include "ctqw/error.hpp"

namespace ctqw {

std::vector<double> propagate_krylov(const Graph& graph, NodeId target, double gamma, std::span<const double> times,
                                     const KrylovOptions& options) {
  using CVec = Eigen::VectorXcd;
  const std::size_t n = graph.size();
  if (n < 2) throw ConfigError("search needs at least two nodes");
  if (target.index >= n) throw ConfigError("target node out of range", "invalid_target");
  if (!std::isfinite(gamma) || gamma <= 0.0) throw ConfigError("gamma must be positive", "invalid_gamma");
  if (options.subspace_dim < 2) throw ConfigError("Krylov subspace dimension must be at least 2");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
      throw ConfigError("Krylov times must be finite, non-negative and ascending");
    }
  }

  const auto w = static_cast<Eigen::Index>(target.index);
  std::size_t max_degree = 0;
  for (std::size_t i = 0; i < n; ++i) max_degree = std::max(max_degree, graph.degree(i));
  const double h_norm = 2.0 * gamma * static_cast<double>(max_degree) + 1.0;

  auto apply_h = [&](const CVec& x, CVec& y) {
    graph.apply_laplacian(x, y);
    y *= gamma;
    y(w) -= x(w);
  };

  const auto mmax = static_cast<Eigen::Index>(std::min(options.subspace_dim, n));
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXcd basis(nn, mmax);
  CVec state = CVec::Constant(nn, 1.0 / std::sqrt(static_cast<double>(n)));
  CVec work(nn);
  std::vector<double> alpha(static_cast<std::size_t>(mmax)), beta(static_cast<std::size_t>(mmax));
  std::vector<double> out(times.size());

  double t_now = 0.0;
  double tau = 1.0 / h_norm;
  std::size_t next = 0;
  std::size_t steps = 0;
  while (next < times.size() && times[next] <= t_now) out[next++] = std::clamp(std::norm(state(w)), 0.0, 1.0);

  while (next < times.size()) {
    const double scale = state.norm();
    basis.col(0) = state / scale;
    Eigen::Index m = 0;
    double residual = 0.0;
    bool exact = false;
    for (Eigen::Index k = 0; k < mmax; ++k) {
      apply_h(basis.col(k), work);
      // two passes of full Gram-Schmidt against the basis so far
      for (int pass = 0; pass < 2; ++pass) {
        const CVec c = basis.leftCols(k + 1).adjoint() * work;
        work.noalias() -= basis.leftCols(k + 1) * c;
        if (pass == 0) alpha[static_cast<std::size_t>(k)] = c(k).real();
      }
      m = k + 1;
      residual = work.norm();
      if (residual <= 1e-13 * h_norm) {
        exact = true;
        break;
      }
      beta[static_cast<std::size_t>(k)] = residual;
      if (k + 1 < mmax) basis.col(k + 1) = work / residual;
    }

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      tri(k, k) = alpha[static_cast<std::size_t>(k)];
      if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[static_cast<std::size_t>(k)];
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const Eigen::VectorXd& lambda = es.eigenvalues();
    const Eigen::MatrixXd& z = es.eigenvectors();
    const Eigen::VectorXd z0 = z.row(0).transpose();

    // exp(-i T tau) e_1 in the Lanczos basis
    auto propagated = [&](double dt) {
      CVec phased(m);
      for (Eigen::Index j = 0; j < m; ++j) phased(j) = z0(j) * std::polar(1.0, -lambda(j) * dt);
      return CVec(z.cast<std::complex<double>>() * phased);
    };
    auto error_estimate = [&](double dt) { return exact ? 0.0 : residual * std::abs(propagated(dt)(m - 1)); };

    const double remaining = times.back() - t_now;
    tau = std::min(tau, remaining);
    while (error_estimate(tau) > options.step_tolerance) {
      tau *= 0.5;
      if (tau < 1e-14 / h_norm) throw NumericalError("Krylov step size underflow", "krylov_nonconvergence");
    }
    while (tau < remaining) {
      const double longer = std::min(2.0 * tau, remaining);
      if (error_estimate(longer) > options.step_tolerance) break;
      tau = longer;
    }

    const Eigen::RowVectorXcd target_row = basis.row(w).leftCols(m);
    while (next < times.size() && times[next] - t_now <= tau) {
      const std::complex<double> amp = scale * (target_row * propagated(times[next] - t_now))(0);
      out[next++] = std::clamp(std::norm(amp), 0.0, 1.0);
    }
    state = scale * (basis.leftCols(m) * propagated(tau));
    t_now += tau;
    if (++steps > options.max_steps) {
      throw NumericalError("Krylov propagation exceeded " + std::to_string(options.max_steps) + " steps",
                           "krylov_nonconvergence");
    }
  }
  return out;
}

}  // namespace ctqw
