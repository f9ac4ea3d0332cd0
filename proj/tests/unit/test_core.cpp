#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "grushin/core.hpp"

using namespace grushin;
using Catch::Approx;

namespace {

// Independent oracle: phi_eps * 1_[a,b] by composite Simpson on the raw bump.
double convolution_oracle(double a, double b, double eps, double x) {
  auto bump = [](double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; };
  const int n = 20000;
  auto simpson = [&](double lo, double hi) {
    const double h = (hi - lo) / n;
    double s = bump(lo) + bump(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * bump(lo + i * h);
    return s * h / 3.0;
  };
  const double mass = simpson(-1.0, 1.0);
  // (phi_eps * 1)(x) = int_{(x-b)/eps}^{(x-a)/eps} phi(t) dt / mass, clipped to [-1, 1].
  const double lo = std::max(-1.0, (x - b) / eps);
  const double hi = std::min(1.0, (x - a) / eps);
  if (hi <= lo) return 0.0;
  return simpson(lo, hi) / mass;
}

}  // namespace

TEST_CASE("parse_potential: power, shifted, table", "[core]") {
  const auto p = parse_potential("power:gamma=1");
  CHECK(p.is_structured());
  CHECK(p.gamma() == 1.0);
  CHECK(eval_potential(p, 2.0) == Approx(4.0));
  CHECK(eval_potential(p, -3.0) == Approx(9.0));

  const auto s = parse_potential("shifted:s2=1/1");
  CHECK(s.is_exact_family());
  CHECK(s.s2() == ExactScalar::rational(1));
  CHECK(eval_potential(s, 0.0) == 1.0);
  CHECK(eval_potential(s, 2.0) == Approx(5.0));

  const std::string path = "test_core_pot.csv";
  {
    std::ofstream out(path);
    out << "x,v\n-2,4\n-1,1\n0,0.5\n1,1\n2,4\n";
  }
  const auto t = parse_potential("table:" + path + ",ext=2");
  CHECK(t.is_sampled());
  CHECK(eval_potential(t, 0.5) == Approx(0.75));
  // Quadratic extrapolation beyond the nodes.
  CHECK(eval_potential(t, 4.0) == Approx(16.0));
  CHECK(eval_potential(t, -6.0) == Approx(36.0));
  std::remove(path.c_str());
}

TEST_CASE("parse_potential errors", "[core]") {
  CHECK_THROWS_AS(parse_potential("power:gama=1"), ParseError);
  CHECK_THROWS_AS(parse_potential("cubic:gamma=1"), ParseError);
  CHECK_THROWS_AS(parse_potential("power:gamma=x"), ParseError);
  CHECK_THROWS_AS(parse_potential("shifted:s2=-1"), Error);
  CHECK_THROWS_AS(parse_potential("table:/nonexistent/file.csv"), Error);
  try {
    parse_potential("power:gamma=1,bump=1@0:1:0.8");
    FAIL("eps larger than half width must be rejected");
  } catch (const Error& e) {
    CHECK(std::string(e.kind()) != "");
  }
}

TEST_CASE("structured profile W~ >= 1 and V >= |x|^{2 gamma}", "[core]") {
  const auto v = parse_potential("power:gamma=1.5,bump=0.7@-1:2:0.3,bump=2@3:4:0.4");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-8.0, 8.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = dist(rng);
    CHECK(eval_potential(v, x) >= std::pow(std::abs(x), 3.0) * (1.0 - 1e-14));
  }
}

TEST_CASE("torus base factor", "[core]") {
  const auto v = parse_potential("torus:gamma=1");
  CHECK(v.geometry() == Geometry::torus);
  CHECK(eval_potential(v, pi) == Approx(4.0));
  CHECK(eval_potential(v, 0.0) == Approx(0.0).margin(1e-15));
  // Periodic wrap.
  CHECK(eval_potential(v, 0.3 + 2.0 * pi) == Approx(eval_potential(v, 0.3)));
  // Near 0 it behaves like x^2.
  CHECK(eval_potential(v, 1e-3) == Approx(1e-6).epsilon(1e-6));
}

TEST_CASE("mollified_indicator", "[core]") {
  const auto w = mollified_indicator(0.0, 2.0, 0.5);
  CHECK(w(1.0) == 1.0);
  CHECK(w(3.0) == 0.0);
  const double mid = w(-0.25);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  CHECK(mid == Approx(convolution_oracle(0.0, 2.0, 0.5, -0.25)).margin(1e-8));
  for (double x : {-0.4, -0.1, 0.1, 0.3, 1.6, 1.9, 2.2})
    CHECK(w(x) == Approx(convolution_oracle(0.0, 2.0, 0.5, x)).margin(1e-8));

  double prev = -1.0;
  for (double x = -0.5; x <= 0.5; x += 0.01) {
    CHECK(w(x) >= prev - 1e-15);
    prev = w(x);
  }
  prev = 2.0;
  for (double x = 1.5; x <= 2.5; x += 0.01) {
    CHECK(w(x) <= prev + 1e-15);
    prev = w(x);
  }
  CHECK_THROWS_AS(mollified_indicator(1.0, 0.0, 0.1), Error);
  CHECK_THROWS_AS(mollified_indicator(0.0, 1.0, 0.6), Error);
}

TEST_CASE("perturbation sup norm", "[core]") {
  const auto w = mollified_indicator(-1.0, 1.0, 0.2);
  // sup of x^2 W is attained inside (1, 1.2); compare against a dense scan.
  double scan = 0.0;
  for (int i = 0; i <= 2000000; ++i) {
    const double x = -1.3 + 2.6 * i / 2000000.0;
    scan = std::max(scan, x * x * w(x));
  }
  const double s = w.weighted_sup(Geometry::cylinder, 1.0);
  CHECK(s >= scan * (1.0 - 1e-12));
  CHECK(s == Approx(scan).epsilon(1e-9));
  CHECK(Perturbation(std::vector<Bump>{}).weighted_sup(Geometry::cylinder, 1.0) == 0.0);
}

TEST_CASE("render round trip", "[core]") {
  for (const char* spec : {"power:gamma=1", "power:gamma=2,bump=0.5@-1:1:0.2", "shifted:s2=3/4",
                           "shifted:s2=sqrt2", "torus:gamma=0.5,bump=1@0:1:0.25"}) {
    const auto v = parse_potential(spec);
    CHECK(parse_potential(v.render()) == v);
    CHECK(v.render() == spec);
  }
  const auto w = parse_perturbation("0.5@-1:1:0.2+1@2:3:0.5");
  CHECK(parse_perturbation(w.render()) == w);
}

TEST_CASE("exact scalars", "[core]") {
  CHECK(parse_exact_scalar("2/4") == ExactScalar::rational(1, 2));
  CHECK(parse_exact_scalar("irr:sqrt2").render() == "sqrt2");
  CHECK(parse_exact_scalar("sqrt2").value() == Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(parse_exact_scalar("sqrt4"), Error);
  CHECK_THROWS_AS(parse_exact_scalar("1/0"), Error);
  CHECK_THROWS_AS(detail::checked_mul(std::int64_t{1} << 40, std::int64_t{1} << 40), OverflowError);
}

TEST_CASE("tolerances validate", "[core]") {
  Tolerances t;
  CHECK_NOTHROW(t.validate());
  t.cluster_abs = 0.0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}
