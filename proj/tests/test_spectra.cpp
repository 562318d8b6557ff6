#include "ctqw/spectra.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ctqw/error.hpp"

using namespace ctqw;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = nd(rng);
  return m;
}

std::vector<double> sorted_eigenvalues(const Graph& g) {
  const auto dec = eigh(g.laplacian());
  return {dec.eigenvalues.data(), dec.eigenvalues.data() + dec.eigenvalues.size()};
}

double pow_int(double b, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

TEST_CASE("two-node and complete spectra") {
  const auto k2 = eigh(build(GraphSpec::complete(2)).laplacian());
  CHECK(k2.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(k2.eigenvalues(1) == doctest::Approx(2.0));

  for (std::size_t n : {3u, 10u, 37u}) {
    const auto dec = eigh(build(GraphSpec::complete(n)).laplacian());
    CHECK(std::abs(dec.eigenvalues(0)) < 1e-12);
    for (Eigen::Index k = 1; k < dec.eigenvalues.size(); ++k) {
      CHECK(std::abs(dec.eigenvalues(k) - static_cast<double>(n)) < 1e-10);
    }
    REQUIRE(dec.groups.size() == 2);
    CHECK(dec.groups[1].size == n - 1);
  }
}

TEST_CASE("decomposition invariants") {
  for (int n : {1, 2, 7, 60}) {
    const Eigen::MatrixXd m = random_symmetric(n, 17 + n);
    const auto dec = eigh(m);
    const Eigen::MatrixXd& v = dec.eigenvectors;
    const double scale = m.cwiseAbs().maxCoeff();
    CHECK((m - v * dec.eigenvalues.asDiagonal() * v.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::is_sorted(dec.eigenvalues.data(), dec.eigenvalues.data() + n));
    for (int k = 0; k < n; ++k) {
      int i = 0;
      while (std::abs(v(i, k)) <= 1e-12) ++i;
      CHECK(v(i, k) > 0.0);
    }
  }
}

TEST_CASE("eigh rejects bad input") {
  Eigen::MatrixXd m = random_symmetric(5, 3);
  m(0, 1) += 1e-6;
  CHECK_THROWS_AS(eigh(m), ConfigError);
  CHECK_THROWS_AS(eigh(Eigen::MatrixXd::Zero(3, 4)), ConfigError);
  CHECK_THROWS_AS(eigh(random_symmetric(20, 4), 10), GuardExceeded);
  CHECK_THROWS_AS(eigh_projected(random_symmetric(20, 4), Eigen::MatrixXd::Ones(20, 1), 10), GuardExceeded);
  CHECK_THROWS_AS(eigh_projected(random_symmetric(5, 4), Eigen::MatrixXd::Ones(4, 1)), ConfigError);
}

TEST_CASE("projected coefficients agree with full eigenvectors") {
  const Eigen::MatrixXd m = build(GraphSpec::dsg(3)).laplacian();
  Eigen::MatrixXd probes = Eigen::MatrixXd::Zero(m.rows(), 2);
  probes(4, 0) = 1.0;
  probes.col(1).setConstant(1.0 / std::sqrt(static_cast<double>(m.rows())));
  const auto full = eigh(m);
  const auto proj = eigh_projected(m, probes);
  CHECK((full.eigenvalues - proj.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(full.groups.size() == proj.groups.size());
  const Eigen::MatrixXd direct = full.eigenvectors.transpose() * probes;
  for (const auto& g : full.groups) {
    const auto b = static_cast<Eigen::Index>(g.begin), s = static_cast<Eigen::Index>(g.size);
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        const double want = direct.col(p).segment(b, s).dot(direct.col(q).segment(b, s));
        const double got = proj.coefficients.col(p).segment(b, s).dot(proj.coefficients.col(q).segment(b, s));
        CHECK(std::abs(want - got) < 1e-12);
      }
    }
  }
}

TEST_CASE("degeneracy grouping") {
  const std::vector<double> ev{0.0, 1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0};
  const auto groups = group_degenerate(ev, degeneracy_tolerance(ev));
  REQUIRE(groups.size() == 4);
  CHECK(groups[1].size == 2);
  CHECK(groups[3].begin == 4);
  CHECK(degeneracy_tolerance(ev) == doctest::Approx(3e-8));
  const std::vector<double> one{4.0};
  CHECK(degeneracy_tolerance(one) == 0.0);
}

TEST_CASE("product spectrum is the Minkowski sum of the factors") {
  const std::vector<std::pair<GraphSpec, GraphSpec>> pairs{
      {GraphSpec::chain(3, false), GraphSpec::complete(3)},
      {GraphSpec::dsg(2), GraphSpec::torus(3, 2)},
      {GraphSpec::tfractal(2), GraphSpec::chain(5)},
  };
  for (const auto& [a, b] : pairs) {
    const auto ea = sorted_eigenvalues(build(a));
    const auto eb = sorted_eigenvalues(build(b));
    std::vector<double> sums;
    for (double x : ea)
      for (double y : eb) sums.push_back(x + y);
    std::sort(sums.begin(), sums.end());
    const auto ep = sorted_eigenvalues(build(GraphSpec::product(a, b)));
    REQUIRE(ep.size() == sums.size());
    for (std::size_t k = 0; k < ep.size(); ++k) CHECK(std::abs(ep[k] - sums[k]) <= 1e-9);
  }
}

TEST_CASE("laplacians are positive semi-definite") {
  for (const auto& spec : {GraphSpec::dsg(4), GraphSpec::tfractal(4), GraphSpec::cayley_tree(5), GraphSpec::torus(4, 3)}) {
    const auto ev = sorted_eigenvalues(build(spec));
    CHECK(ev.front() > -1e-12);
    CHECK(ev[1] > 1e-8);
  }
}

TEST_CASE("complete graph sums") {
  for (std::size_t n : {4u, 9u, 50u}) {
    const auto s = spectral_sums(build(GraphSpec::complete(n)), NodeId{n - 1});
    const double nd = static_cast<double>(n);
    CHECK(s.zeta1 == doctest::Approx((nd - 1.0) / nd).epsilon(1e-12));
    CHECK(s.xi1 == doctest::Approx((nd - 1.0) / (nd * nd)).epsilon(1e-12));
    CHECK(s.a0_sq == doctest::Approx(1.0 / nd).epsilon(1e-10));
  }
}

TEST_CASE("sum rules for every target") {
  for (const auto& spec : {GraphSpec::dsg(3), GraphSpec::tfractal(3), GraphSpec::torus(4, 2), GraphSpec::cayley_tree(4)}) {
    const Graph g = build(spec);
    const auto dec = eigh(g.laplacian());
    for (std::size_t w = 0; w < g.size(); ++w) {
      const auto s = spectral_sums(dec, NodeId{w});
      double total = 0.0;
      for (const auto& grp : s.groups) total += grp.weight;
      CHECK(std::abs(total - 1.0) <= 1e-10);
      CHECK(std::abs(s.a0_sq - 1.0 / static_cast<double>(g.size())) <= 1e-10);
      CHECK(s.xi1 <= s.max_amp_sq * s.zeta1 * (1.0 + 1e-12));
      CHECK(s.xi2 <= s.max_amp_sq * s.zeta2 * (1.0 + 1e-12));
      CHECK(s.max_amp_sq <= s.max_group_amp_sq);
    }
  }
}

TEST_CASE("projected and full routes give the same sums") {
  const Graph g = build(GraphSpec::tfractal(4));
  const NodeId w = default_target(GraphSpec::tfractal(4));
  const auto a = spectral_sums(g, w);
  const auto b = spectral_sums(eigh(g.laplacian()), w);
  CHECK(a.xi1 == doctest::Approx(b.xi1).epsilon(1e-12));
  CHECK(a.xi2 == doctest::Approx(b.xi2).epsilon(1e-12));
  CHECK(a.max_amp_sq == doctest::Approx(b.max_amp_sq).epsilon(1e-10));
}

TEST_CASE("dsg inverse sums match their closed forms") {
  for (int g = 1; g <= 6; ++g) {
    const auto s = spectral_sums(build(GraphSpec::dsg(g)), NodeId{0});
    const double z1 = (-3.0 - 4.0 * pow_int(3, g) + 7.0 * pow_int(5, g)) / 30.0;
    const double z2 = (-13.0 - 14.0 * pow_int(3, g) + 21.0 * pow_int(5, g) + 6.0 * pow_int(25, g)) / 900.0;
    CHECK(std::abs(s.zeta1 / z1 - 1.0) <= 1e-10);
    CHECK(std::abs(s.zeta2 / z2 - 1.0) <= 1e-10);
  }
}

TEST_CASE("dsg inverse sums approach their asymptotic ratios") {
  double prev1 = 0.0, prev2 = 1e300;
  for (int g = 2; g <= 7; ++g) {
    const auto s = spectral_sums(build(GraphSpec::dsg(g)), NodeId{0});
    const double r1 = s.zeta1 / pow_int(5, g) * 30.0 / 7.0;
    const double r2 = s.zeta2 / pow_int(25, g) * 150.0;
    CHECK(r1 > prev1);
    CHECK(r1 < 1.0);
    CHECK(r2 < prev2);
    CHECK(r2 > 1.0);
    prev1 = r1;
    prev2 = r2;
  }
  CHECK(prev1 > 0.98);
  CHECK(prev2 < 1.01);
}

TEST_CASE("disconnected graphs are rejected") {
  const std::vector<Graph::Edge> edges{{0, 1}, {2, 3}};
  const Graph g(4, edges);
  CHECK_THROWS_AS(spectral_sums(g, NodeId{0}), NumericalError);
  CHECK_THROWS_AS(spectral_sums(g, NodeId{9}), ConfigError);
}

TEST_CASE("alpha on tori is exactly minus one") {
  for (std::size_t d : {1u, 2u, 3u}) {
    std::vector<GraphSpec> fam;
    for (std::size_t l : {4u, 5u, 6u, 7u}) fam.push_back(GraphSpec::torus(l, d));
    const std::vector<NodeId> targets(fam.size(), NodeId{0});
    const AlphaFit fit = fit_alpha(fam, targets);
    CHECK(fit.alpha == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(fit.c == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(fit.flagged);
  }
}

TEST_CASE("alpha on the fractals") {
  for (auto make : {+[](int g) { return GraphSpec::dsg(g); }, +[](int g) { return GraphSpec::tfractal(g); }}) {
    std::vector<GraphSpec> fam;
    std::vector<NodeId> targets;
    for (int g = 3; g <= 7; ++g) {
      fam.push_back(make(g));
      targets.push_back(default_target(fam.back()));
    }
    const AlphaFit fit = fit_alpha(fam, targets);
    CAPTURE(to_string(fam[0].family));
    CHECK(fit.alpha == doctest::Approx(-0.9).epsilon(0.05 / 0.9));
    CHECK_FALSE(fit.flagged);
  }
  std::vector<GraphSpec> two{GraphSpec::dsg(3), GraphSpec::dsg(4)};
  std::vector<NodeId> t2(2, NodeId{0});
  CHECK_THROWS_AS(fit_alpha(two, t2), ConfigError);
}

TEST_CASE("spectrum csv") {
  const std::vector<double> ev{0.0, 3.0, 3.0};
  const auto groups = group_degenerate(ev, degeneracy_tolerance(ev));
  std::ostringstream out;
  write_spectrum_csv(out, ev, groups);
  CHECK(out.str() == "index,eigenvalue,multiplicity_group\n0,0,0\n1,3,1\n2,3,1\n");
}

TEST_CASE("dense backend health and guard") {
  CHECK(blas_selfcheck());
  CHECK(dense_guard_from_env() > 0);
  CHECK_NOTHROW(require_dense(6000, 6000));
  CHECK_THROWS_AS(require_dense(6001, 6000), GuardExceeded);
}
