#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "grushin/perturb.hpp"

using namespace grushin;
using Catch::Approx;

namespace {

// Plateau of height a wide enough to cover every truncation domain used here,
// so V + t x^2 W = (1 + a t) x^2 there and lambda_n(t) = (2n+1)|k| sqrt(1 + a t).
Perturbation wide_plateau(double a) { return mollified_indicator(-60.0, 60.0, 1.0).scaled(a); }

// Normalized harmonic oscillator states for -u'' + k^2 x^2 u, n = 0 and 2.
double ho_state(int k, int n, double x) {
  const double y = std::sqrt(static_cast<double>(k)) * x;
  const double c = std::pow(k / pi, 0.25) * std::exp(-0.5 * y * y);
  return n == 0 ? c : c * (4.0 * y * y - 2.0) / std::sqrt(8.0);
}

// k^2 int x^2 W u^2 by composite Simpson on [-12, 12].
double ho_slope(int k, int n, const Perturbation& w) {
  const int steps = 24000;
  const double a = -12.0, h = 24.0 / steps;
  double s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = a + i * h;
    const double u = ho_state(k, n, x);
    const double f = x * x * w(x) * u * u;
    s += f * (i == 0 || i == steps ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return k * k * s * h / 3.0;
}

}  // namespace

TEST_CASE("Hellmann-Feynman slope of a dilated oscillator", "[perturb]") {
  const Tolerances tol;
  const auto v = Potential::power(1.0);
  const auto w = wide_plateau(1.0);
  for (int k : {1, 2})
    for (int n : {0, 1, 3}) CHECK(hellmann_feynman(v, w, k, n, tol) == Approx(0.5 * (2 * n + 1) * k).epsilon(1e-6));
}

TEST_CASE("Hellmann-Feynman slope against an explicit eigenfunction", "[perturb]") {
  const Tolerances tol;
  const auto w = mollified_indicator(-1.0, 1.0, 0.2);
  const auto v = Potential::shifted(ExactScalar::rational(1));
  CHECK(hellmann_feynman(v, w, 2, 0, tol) == Approx(ho_slope(2, 0, w)).epsilon(1e-6));
  CHECK(hellmann_feynman(v, w, 1, 2, tol) == Approx(ho_slope(1, 2, w)).epsilon(1e-6));
}

TEST_CASE("Hellmann-Feynman against finite differences", "[perturb]") {
  const Tolerances tol;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const double gamma = trial % 2 ? 2.0 : 1.0;
    const double c = -1.5 + 2.0 * unif(rng);
    const auto v = Potential::structured(Geometry::cylinder, gamma, {Bump{0.5 + unif(rng), c, c + 1.0, 0.3}});
    const double d = -1.0 + unif(rng);
    const auto w = Perturbation({Bump{0.3 + unif(rng), d, d + 0.8, 0.2}});
    const int k = 1 + trial % 3;
    const int n = trial % 4;
    const auto chk = check_slope(v, w, k, n, tol);
    INFO("trial " << trial << " hf=" << chk.hf << " fd=" << chk.fd);
    CHECK(chk.rel_diff <= 1e-4);
    CHECK(chk.hf >= 0.0);
  }
}

TEST_CASE("zero perturbation leaves the spectrum fixed", "[perturb]") {
  const Tolerances tol;
  const auto v = Potential::power(2.0);
  const PerturbedFamily fam(v, Perturbation{}, 1, 3, tol);
  CHECK(fam.radius() == 0.0);
  const auto s = fam.solve(0.7, 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(s.pairs[j].lambda == fam.base().pairs[j].lambda);
  CHECK(fam.slope(fam.base(), 0).first == 0.0);
}

TEST_CASE("branch tracking follows the dilation", "[perturb]") {
  const Tolerances tol;
  const auto v = Potential::power(1.0);
  const double a = 1e-4;
  const auto branches = track_branches(v, wide_plateau(a), 1, {0, 1, 2}, 1.0, 8, tol);
  REQUIRE(branches.size() == 3);
  for (const auto& b : branches) {
    CHECK(b.t_grid.size() == 9);
    CHECK(b.t_grid.back() == Approx(1.0));
    const double expect = (2 * b.level + 1) * std::sqrt(1.0 + a);
    CHECK(b.lambdas.back() == Approx(expect).epsilon(1e-7));
    CHECK(b.lipschitz_ok);
    for (double o : b.overlaps) CHECK(o >= 0.9);
    for (std::size_t i = 1; i < b.lambdas.size(); ++i) CHECK(b.lambdas[i] >= b.lambdas[i - 1]);
    CHECK(b.hf_slope == Approx(b.fd_slope).epsilon(1e-4));
    CHECK(b.hf_slope == Approx(0.5 * a * (2 * b.level + 1)).epsilon(1e-5));
  }
  CHECK_THROWS_AS(track_branches(v, wide_plateau(1.0), 1, {0}, 1.0, 8, tol), PreconditionError);
  CHECK_THROWS_AS(track_branches(v, wide_plateau(a), 1, {0}, 0.0, 8, tol), InvalidArgument);
}

TEST_CASE("continuity bound", "[perturb]") {
  const Tolerances tol;
  const auto v = Potential::structured(Geometry::cylinder, 1.0, {Bump{1.0, -0.5, 0.5, 0.25}});
  std::vector<Perturbation> ws{Perturbation{}};
  for (int n = 1; n <= 8; n *= 2) ws.push_back(mollified_indicator(-1.0, 1.0, 0.25).scaled(1.0 / n));
  const auto rep = check_continuity_bound(v, ws, 2, 2, tol, Execution{2});
  REQUIRE(rep.entries.size() == ws.size());
  CHECK(rep.holds);
  CHECK(rep.entries[0].upper_margin == 0.0);
  CHECK(rep.entries[0].reverse_margin == 0.0);
  for (std::size_t i = 1; i < ws.size(); ++i) {
    CHECK(rep.entries[i].w_norm == Approx(1.0 / (1 << (i - 1))).epsilon(1e-9));
    CHECK(rep.entries[i].lambda_vn > rep.entries[i].lambda_v);
    CHECK(rep.entries[i].upper_margin > 0.0);
  }
  // Shrinking W_n moves lambda_m(V_n) monotonically back to lambda_m(V).
  for (std::size_t i = 2; i < ws.size(); ++i)
    CHECK(rep.entries[i].lambda_vn - rep.entries[i].lambda_v < rep.entries[i - 1].lambda_vn - rep.entries[i - 1].lambda_v);
  CHECK_THROWS_AS(check_continuity_bound(v, ws, 1, 0, tol), InvalidArgument);
}

TEST_CASE("gap avoidance", "[perturb]") {
  const Tolerances tol;
  const auto v = Potential::power(1.0);
  const auto w = mollified_indicator(-0.5, 0.5, 0.2);
  // sup x^2 W = 0.7^2 at most; k = 1, m = 2: lambda = 3, kappa = 2.
  const auto rep = check_gap_avoidance(v, w, 1, 2, tol);
  CHECK(rep.lambda_m == Approx(3.0).epsilon(1e-7));
  CHECK(rep.kappa_m == Approx(2.0).epsilon(1e-7));
  CHECK(rep.radius == Approx(w.weighted_sup(Geometry::cylinder, 1.0)));
  CHECK(rep.j_plus.lo == Approx(3.0 + rep.radius));
  CHECK(rep.j_minus.hi == Approx(3.0 - rep.radius));
  CHECK(rep.violations == 0);
  CHECK_FALSE(rep.undecided);
  // lambda_2(V_1) shifts up by at most the radius and stays in the window.
  REQUIRE_FALSE(rep.perturbed.empty());

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const int k = 1 + trial % 3;
    const int m = 1 + trial % 4;
    const auto vv = Potential::structured(Geometry::cylinder, 1.0 + trial % 2, {Bump{unif(rng), -1.0, 0.0, 0.3}});
    const PerturbedFamily base(vv, Perturbation{}, k, static_cast<std::size_t>(m) + 1, tol);
    const double kappa = detail::level_gap(base.base().pairs, static_cast<std::size_t>(m - 1));
    auto ww = mollified_indicator(-0.6, 0.4, 0.2);
    const double target = (0.1 + 0.8 * unif(rng)) * kappa;
    ww = ww.scaled(target / (k * k * ww.weighted_sup(Geometry::cylinder, vv.gamma())));
    const auto r = check_gap_avoidance(vv, ww, k, m, tol);
    INFO("trial " << trial);
    CHECK(r.violations == 0);
  }

  CHECK_THROWS_AS(check_gap_avoidance(v, w.scaled(20.0), 1, 2, tol), PreconditionError);
}

TEST_CASE("splitting a collision", "[perturb]") {
  const Tolerances tol;
  const auto one = ExactScalar::rational(1);
  const auto w = mollified_indicator(-1.0, 1.0, 0.2);
  const auto rep = splitting_experiment(one, ExactScalar::rational(6), w, 0.05, tol);
  REQUIRE(rep.members.size() == 2);
  CHECK(rep.members[0].k == 1);
  CHECK(rep.members[0].n == 2);
  CHECK(rep.members[1].k == 2);
  CHECK(rep.members[1].n == 0);
  for (const auto& m : rep.members) CHECK(m.lambda0 == Approx(6.0).epsilon(1e-7));
  CHECK(rep.members[0].hf_slope == Approx(ho_slope(1, 2, w)).epsilon(1e-6));
  CHECK(rep.members[1].hf_slope == Approx(ho_slope(2, 0, w)).epsilon(1e-6));
  REQUIRE(rep.pairs.size() == 1);
  CHECK(rep.pairs[0].certified);
  CHECK(rep.pairs[0].rel_deviation < 0.2);
  CHECK(rep.verdict == Verdict::pass);

  const auto flat = splitting_experiment(one, ExactScalar::rational(6), w, 0.0, tol);
  CHECK(flat.verdict == Verdict::undecided);

  // s = 0, E = 3: k = 1 (n = 1) against k = 3 (n = 0).
  const auto z = splitting_experiment(ExactScalar::rational(0), ExactScalar::rational(3), w, 0.02, tol);
  CHECK(z.members.size() == 2);
  CHECK(z.verdict == Verdict::pass);

  CHECK_THROWS_AS(splitting_experiment(one, ExactScalar::rational(5), w, 0.05, tol), PreconditionError);
  CHECK_THROWS_AS(splitting_experiment(ExactScalar::sqrt_of(2), ExactScalar::rational(5), w, 0.05, tol),
                  InvalidArgument);
}
