#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace ctqw {

/// Complete graph K_N with coupling gamma: A = N gamma - 1, B = sqrt(A^2 + 4 gamma), tau = 2 pi / B.
struct CompleteOracleParams {
  std::size_t n = 0;
  double gamma = 0.0;
  double a = 0.0;
  double b = 0.0;
  double period = 0.0;
};

/// Throws ConfigError unless n >= 2 and gamma > 0.
CompleteOracleParams complete_params(std::size_t n, double gamma);

/// Exact success probability on K_N (canonical closed form).
double complete_success(const CompleteOracleParams& p, double t);
/// Same quantity written with 4 + gamma (N - 1/gamma)^2 in the denominator.
double complete_success_alt(const CompleteOracleParams& p, double t);

/// Propagator entries <k|U|w> (k != w) and <w|U|w> with w the last node, as
/// printed in the derivation. They carry an overall sign -1 relative to
/// exp(-iHt); probabilities are unaffected.
struct CompletePropagator {
  std::complex<double> u_kw;
  std::complex<double> u_ww;
};
CompletePropagator complete_propagator(const CompleteOracleParams& p, double t);
/// (1/N) |(N-1) U_kw + U_ww|^2
double complete_success_from_propagator(const CompleteOracleParams& p, double t);

/// sin^2(t / sqrt(N)); an approximation valid for large N with N gamma near 1.
double complete_large_n(std::size_t n, double t);

/// Laplacian spectrum of the dual Sierpinski gasket as (eigenvalue, multiplicity), ascending.
struct ExactSpectrum {
  unsigned generation = 0;
  std::vector<std::pair<double, std::uint64_t>> levels;

  std::uint64_t total_multiplicity() const;
  double trace() const;
  /// Every eigenvalue repeated by its multiplicity, ascending.
  std::vector<double> expanded() const;
};

ExactSpectrum dsg_exact_spectrum(unsigned g);

/// m(3, g) = (3^{g-1} + 3)/2 and m(5, g) = (3^{g-1} - 1)/2 for g >= 2.
std::uint64_t dsg_multiplicity_3(unsigned g);
std::uint64_t dsg_multiplicity_5(unsigned g);

struct ZetaPair {
  double zeta1 = 0.0;
  double zeta2 = 0.0;
};

/// Closed forms for the DSG inverse-eigenvalue sums.
ZetaPair zeta_closed(unsigned g);
/// Direct sums over the nonzero levels.
ZetaPair zeta_direct(const ExactSpectrum& spectrum);

/// Largest relative deviation of 1/l+ + 1/l- = 5/l and 1/l+^2 + 1/l-^2 = (25 - 2l)/l^2
/// over the nonzero levels of generation g - 1 mapped to generation g.
struct PairIdentityCheck {
  double first = 0.0;
  double second = 0.0;
};
PairIdentityCheck check_pair_identities(unsigned g);

}  // namespace ctqw
