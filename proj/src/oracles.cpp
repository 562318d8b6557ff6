#include "ctqw/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctqw/error.hpp"

namespace ctqw {

namespace {

constexpr unsigned kMaxExactGeneration = 20;

std::uint64_t pow3(unsigned e) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < e; ++i) r *= 3;
  return r;
}

void require_generation(unsigned g) {
  if (g < 1 || g > kMaxExactGeneration) throw ConfigError("generation must be in [1, 20]", "invalid_generation");
}

std::pair<double, double> split_level(double lambda) {
  const double root = std::sqrt(25.0 - 4.0 * lambda);
  const double plus = 0.5 * (5.0 + root);
  // lambda- from lambda+ lambda- = lambda
  return {lambda / plus, plus};
}

}  // namespace

CompleteOracleParams complete_params(std::size_t n, double gamma) {
  if (n < 2) throw ConfigError("complete graph needs n >= 2");
  if (!std::isfinite(gamma) || gamma <= 0.0) throw ConfigError("gamma must be positive", "invalid_gamma");
  CompleteOracleParams p;
  p.n = n;
  p.gamma = gamma;
  p.a = static_cast<double>(n) * gamma - 1.0;
  p.b = std::sqrt(p.a * p.a + 4.0 * gamma);
  p.period = 2.0 * std::numbers::pi / p.b;
  return p;
}

double complete_success(const CompleteOracleParams& p, double t) {
  const double n = static_cast<double>(p.n);
  const double g = p.gamma;
  const double b2 = 1.0 + 4.0 * g - 2.0 * n * g + n * n * g * g;
  const double s = std::sin(t * std::sqrt(b2) / 2.0);
  return (1.0 + 4.0 * g * (n - 1.0) / b2 * s * s) / n;
}

double complete_success_alt(const CompleteOracleParams& p, double t) {
  const double n = static_cast<double>(p.n);
  const double g = p.gamma;
  const double d = n - 1.0 / g;
  const double s = std::sin(t * std::sqrt(4.0 * g + (n * g - 1.0) * (n * g - 1.0)) / 2.0);
  return (1.0 + 4.0 * (n - 1.0) * s * s / (4.0 + g * d * d)) / n;
}

CompletePropagator complete_propagator(const CompleteOracleParams& p, double t) {
  using namespace std::complex_literals;
  const std::complex<double> phase = std::polar(1.0, -t * p.a / 2.0);
  const double s = std::sin(t * p.b / 2.0);
  const double c = std::cos(t * p.b / 2.0);
  CompletePropagator u;
  u.u_kw = p.gamma / p.b * phase * (-2.0i * s);
  u.u_ww = phase / p.b * (-2.0i * p.gamma * s + 1.0i * p.a * s - p.b * c);
  return u;
}

double complete_success_from_propagator(const CompleteOracleParams& p, double t) {
  const CompletePropagator u = complete_propagator(p, t);
  return std::norm(static_cast<double>(p.n - 1) * u.u_kw + u.u_ww) / static_cast<double>(p.n);
}

double complete_large_n(std::size_t n, double t) {
  if (n < 2) throw ConfigError("complete graph needs n >= 2");
  const double s = std::sin(t / std::sqrt(static_cast<double>(n)));
  return s * s;
}

std::uint64_t ExactSpectrum::total_multiplicity() const {
  std::uint64_t total = 0;
  for (const auto& [value, mult] : levels) total += mult;
  return total;
}

double ExactSpectrum::trace() const {
  double total = 0.0;
  for (const auto& [value, mult] : levels) total += value * static_cast<double>(mult);
  return total;
}

std::vector<double> ExactSpectrum::expanded() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total_multiplicity()));
  for (const auto& [value, mult] : levels) out.insert(out.end(), static_cast<std::size_t>(mult), value);
  return out;
}

std::uint64_t dsg_multiplicity_3(unsigned g) {
  if (g < 2) throw ConfigError("m(3, g) defined for g >= 2", "invalid_generation");
  return (pow3(g - 1) + 3) / 2;
}

std::uint64_t dsg_multiplicity_5(unsigned g) {
  if (g < 2) throw ConfigError("m(5, g) defined for g >= 2", "invalid_generation");
  return (pow3(g - 1) - 1) / 2;
}

ExactSpectrum dsg_exact_spectrum(unsigned g) {
  require_generation(g);
  std::vector<std::pair<double, std::uint64_t>> levels{{0.0, 1}, {3.0, 2}};
  for (unsigned gen = 2; gen <= g; ++gen) {
    std::vector<std::pair<double, std::uint64_t>> next{{0.0, 1}};
    for (const auto& [value, mult] : levels) {
      if (value == 0.0) continue;
      const auto [lo, hi] = split_level(value);
      next.emplace_back(lo, mult);
      next.emplace_back(hi, mult);
    }
    next.emplace_back(3.0, dsg_multiplicity_3(gen));
    if (const auto m5 = dsg_multiplicity_5(gen); m5 > 0) next.emplace_back(5.0, m5);
    std::sort(next.begin(), next.end());
    // merge coincident values
    levels.clear();
    for (const auto& lv : next) {
      if (!levels.empty() && std::abs(lv.first - levels.back().first) <= 1e-12 * 6.0) {
        levels.back().second += lv.second;
      } else {
        levels.push_back(lv);
      }
    }
  }
  ExactSpectrum out;
  out.generation = g;
  out.levels = std::move(levels);
  return out;
}

ZetaPair zeta_closed(unsigned g) {
  require_generation(g);
  const double p3 = std::pow(3.0, g);
  const double p5 = std::pow(5.0, g);
  const double p25 = std::pow(25.0, g);
  return {(-3.0 - 4.0 * p3 + 7.0 * p5) / 30.0, (-13.0 - 14.0 * p3 + 21.0 * p5 + 6.0 * p25) / 900.0};
}

ZetaPair zeta_direct(const ExactSpectrum& spectrum) {
  ZetaPair z;
  for (const auto& [value, mult] : spectrum.levels) {
    if (value == 0.0) continue;
    const double m = static_cast<double>(mult);
    z.zeta1 += m / value;
    z.zeta2 += m / (value * value);
  }
  return z;
}

PairIdentityCheck check_pair_identities(unsigned g) {
  require_generation(g);
  PairIdentityCheck out;
  if (g < 2) return out;
  for (const auto& [value, mult] : dsg_exact_spectrum(g - 1).levels) {
    if (value == 0.0) continue;
    const double root = std::sqrt(25.0 - 4.0 * value);
    const double lo = 0.5 * (5.0 - root);
    const double hi = 0.5 * (5.0 + root);
    const double first = 1.0 / lo + 1.0 / hi;
    const double second = 1.0 / (lo * lo) + 1.0 / (hi * hi);
    const double want1 = 5.0 / value;
    const double want2 = (25.0 - 2.0 * value) / (value * value);
    out.first = std::max(out.first, std::abs(first - want1) / std::abs(want1));
    out.second = std::max(out.second, std::abs(second - want2) / std::abs(want2));
  }
  return out;
}

}  // namespace ctqw
