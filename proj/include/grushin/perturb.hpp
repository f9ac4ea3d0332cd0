#pragma once

// Perturbation experiments on the family P^k_{V + t B W}, B the base weight
// (|x|^{2 gamma} on the cylinder, (4 sin^2(x/2))^gamma on the torus). All
// solves for one family share the grid pair chosen at t = 0, so values at
// different t differ only through the perturbation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "assembler.hpp"
#include "core.hpp"
#include "detail/parallel.hpp"
#include "exact_family.hpp"
#include "schrod1d.hpp"

namespace grushin {

class PerturbedFamily {
 public:
  PerturbedFamily(const Potential& v, const Perturbation& w, int k, std::size_t levels, const Tolerances& tol,
                  const SolverOptions& opts = {})
      : k_(k), levels_(levels), base_(solve_eigen_detailed(v, k, levels, tol, opts)) {
    const double k2 = static_cast<double>(k) * static_cast<double>(k);
    auto fill = [&](const Grid& g, std::vector<double>& kv, std::vector<double>& kbw) {
      kv = scaled_samples(g, v, k);
      kbw = sample(g, [&](double x) { return k2 * v.weight(x) * w(x); });
    };
    fill(base_.grids.coarse, kv_c_, kbw_c_);
    fill(base_.grids.fine, kv_f_, kbw_f_);
    radius_ = k2 * w.weighted_sup(v.geometry(), v.gamma());
  }

  int k() const { return k_; }
  std::size_t levels() const { return levels_; }
  const Solution& base() const { return base_; }
  /// k^2 sup B W: the largest shift any eigenvalue can see per unit t.
  double radius() const { return radius_; }

  Solution solve(double t, std::size_t count) const {
    if (t == 0.0 && count <= base_.pairs.size()) {
      Solution s = base_;
      s.pairs.resize(count);
      return s;
    }
    return solve_fixed(base_.grids, shifted(kv_c_, kbw_c_, t), shifted(kv_f_, kbw_f_, t), k_, count);
  }

  /// Hellmann-Feynman slope of level j of `s`: k^2 <u, B W u>, combined
  /// across the grid pair exactly like the eigenvalues. Returns (value, err).
  std::pair<double, double> slope(const Solution& s, std::size_t j) const {
    const double ic = expectation(base_.grids.coarse, kbw_c_, s.coarse.vectors.at(j));
    const double i_f = expectation(base_.grids.fine, kbw_f_, s.fine.vectors.at(j));
    return {(4.0 * i_f - ic) / 3.0, std::abs(i_f - ic) / 3.0};
  }

 private:
  static std::vector<double> shifted(const std::vector<double>& kv, const std::vector<double>& kbw, double t) {
    std::vector<double> out(kv.size());
    for (std::size_t i = 0; i < kv.size(); ++i) out[i] = kv[i] + t * kbw[i];
    return out;
  }

  static double expectation(const Grid& g, const std::vector<double>& f, const std::vector<double>& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += f[i] * u[i] * u[i];
    return g.spacing() * s;
  }

  int k_;
  std::size_t levels_;
  Solution base_;
  std::vector<double> kv_c_, kbw_c_, kv_f_, kbw_f_;
  double radius_ = 0.0;
};

namespace detail {

/// Distance from level j to the rest of the computed spectrum.
inline double level_gap(const std::vector<EigenPair>& pairs, std::size_t j) {
  double gap = std::numeric_limits<double>::infinity();
  if (j > 0) gap = std::min(gap, pairs[j].lambda - pairs[j - 1].lambda);
  if (j + 1 < pairs.size()) gap = std::min(gap, pairs[j + 1].lambda - pairs[j].lambda);
  return gap;
}

/// 4th-order central difference of lambda_j(t) at t = 0.
inline double fd_slope(const PerturbedFamily& fam, std::size_t j, double delta) {
  auto lam = [&](double t) { return fam.solve(t, j + 1).pairs[j].lambda; };
  return (-lam(2 * delta) + 8 * lam(delta) - 8 * lam(-delta) + lam(-2 * delta)) / (12 * delta);
}

inline double fd_step(const PerturbedFamily& fam, std::size_t j) {
  const double gap = level_gap(fam.base().pairs, j);
  if (fam.radius() == 0.0 || !std::isfinite(gap)) return 1e-2;
  return 1e-2 * std::min(1.0, gap / fam.radius());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hellmann-Feynman

struct SlopeCheck {
  double hf = 0.0;
  double hf_err = 0.0;
  double fd = 0.0;
  double delta = 0.0;
  double lambda = 0.0;
  double rel_diff = 0.0;  // |hf - fd| / max(1, |fd|)
};

/// d lambda_n / dt at t = 0 for P^k_{V + t B W}.
inline double hellmann_feynman(const Potential& v, const Perturbation& w, int k, int n, const Tolerances& tol) {
  if (n < 0) throw InvalidArgument("level must be non-negative");
  const PerturbedFamily fam(v, w, k, static_cast<std::size_t>(n) + 1, tol);
  return fam.slope(fam.base(), static_cast<std::size_t>(n)).first;
}

/// Hellmann-Feynman slope against a 4th-order central difference of the
/// computed eigenvalue on the same grids.
inline SlopeCheck check_slope(const Potential& v, const Perturbation& w, int k, int n, const Tolerances& tol) {
  if (n < 0) throw InvalidArgument("level must be non-negative");
  const auto j = static_cast<std::size_t>(n);
  const PerturbedFamily fam(v, w, k, j + 2, tol);
  SlopeCheck out;
  std::tie(out.hf, out.hf_err) = fam.slope(fam.base(), j);
  out.delta = detail::fd_step(fam, j);
  out.fd = detail::fd_slope(fam, j, out.delta);
  out.lambda = fam.base().pairs[j].lambda;
  out.rel_diff = std::abs(out.hf - out.fd) / std::max(1.0, std::abs(out.fd));
  return out;
}

// ---------------------------------------------------------------------------
// Branch tracking

struct Branch {
  int k = 1;
  int level = 0;
  std::vector<double> t_grid;
  std::vector<double> lambdas;
  std::vector<double> err_est;
  std::vector<double> overlaps;  // |<u(t_i), u(t_{i+1})>| per accepted step
  std::vector<std::vector<double>> vectors;
  double hf_slope = 0.0;
  double fd_slope = 0.0;
  bool lipschitz_ok = true;
};

struct TrackOptions {
  double min_overlap = 0.9;
  int max_halvings = 20;
  double lipschitz_slack = 0.01;
  bool keep_vectors = false;
};

/// Continues each requested level from t = 0 to t_max, matching eigenvectors
/// by maximal overlap; a step is halved while the best overlap is < 0.9.
inline std::vector<Branch> track_branches(const Potential& v, const Perturbation& w, int k,
                                          const std::vector<int>& levels, double t_max, int steps,
                                          const Tolerances& tol, const TrackOptions& topt = {}) {
  if (levels.empty()) throw InvalidArgument("no levels to track");
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  const int top = *std::max_element(levels.begin(), levels.end());
  if (*std::min_element(levels.begin(), levels.end()) < 0) throw InvalidArgument("levels must be >= 0");
  // One spare level above the highest tracked one keeps crossings visible.
  const auto count = static_cast<std::size_t>(top) + 2;
  const PerturbedFamily fam(v, w, k, count, tol);
  const auto& base = fam.base();

  double kappa = std::numeric_limits<double>::infinity();
  for (int lv : levels) kappa = std::min(kappa, detail::level_gap(base.pairs, static_cast<std::size_t>(lv)));
  if (!(t_max * fam.radius() < kappa / 2.0))
    throw PreconditionError("t_max * k^2 * sup|B W| = " + detail::format_double(t_max * fam.radius()) +
                            " is not below half the spectral gap " + detail::format_double(kappa / 2.0));

  std::vector<Branch> branches;
  for (int lv : levels) {
    Branch b;
    b.k = k;
    b.level = lv;
    const auto j = static_cast<std::size_t>(lv);
    b.t_grid.push_back(0.0);
    b.lambdas.push_back(base.pairs[j].lambda);
    b.err_est.push_back(base.pairs[j].err_est);
    b.vectors.push_back(base.fine.vectors[j]);
    b.hf_slope = fam.slope(base, j).first;
    b.fd_slope = detail::fd_slope(fam, j, detail::fd_step(fam, j));
    branches.push_back(std::move(b));
  }
  std::vector<std::size_t> current(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) current[i] = static_cast<std::size_t>(levels[i]);

  const double dt0 = t_max / steps;
  const Grid& fine = base.grids.fine;
  double t = 0.0;
  double dt = dt0;
  int halvings = 0;
  while (t < t_max * (1.0 - 1e-12)) {
    const double t_next = std::min(t_max, t + dt);
    const Solution sol = fam.solve(t_next, count);
    bool ok = true;
    std::vector<std::size_t> match(branches.size());
    std::vector<double> best(branches.size(), 0.0);
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
      const auto& prev = branches[bi].vectors.back();
      for (std::size_t j = 0; j < count; ++j) {
        const double o = std::abs(grid_dot(fine, prev, sol.fine.vectors[j]));
        if (o > best[bi]) best[bi] = o, match[bi] = j;
      }
      if (best[bi] < topt.min_overlap) ok = false;
    }
    if (!ok) {
      if (++halvings > topt.max_halvings)
        throw SolverError("branch continuation failed: overlap below " + detail::format_double(topt.min_overlap) +
                          " at t=" + detail::format_double(t));
      dt *= 0.5;
      continue;
    }
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
      auto& b = branches[bi];
      auto u = sol.fine.vectors[match[bi]];
      if (grid_dot(fine, b.vectors.back(), u) < 0.0)
        for (double& x : u) x = -x;
      const double lam = sol.pairs[match[bi]].lambda;
      const double step = t_next - t;
      if (std::abs(lam - b.lambdas.back()) > fam.radius() * step * (1.0 + topt.lipschitz_slack) + 1e-12)
        b.lipschitz_ok = false;
      b.t_grid.push_back(t_next);
      b.lambdas.push_back(lam);
      b.err_est.push_back(sol.pairs[match[bi]].err_est);
      b.overlaps.push_back(best[bi]);
      b.vectors.push_back(std::move(u));
      current[bi] = match[bi];
    }
    t = t_next;
    halvings = 0;
    dt = dt0;
  }
  if (!topt.keep_vectors)
    for (auto& b : branches) b.vectors.clear();
  return branches;
}

// ---------------------------------------------------------------------------
// Continuity of the spectrum under V -> V + B W_n

struct ContinuityEntry {
  double w_norm = 0.0;  // sup W_n
  double lambda_v = 0.0;
  double lambda_vn = 0.0;
  double upper_margin = 0.0;    // lambda(V) |W_n| - (lambda(V_n) - lambda(V))
  double reverse_margin = 0.0;  // lambda(V_n) |W_n| - (lambda(V) - lambda(V_n))
  double err_est = 0.0;
  bool holds = true;
};

struct ContinuityReport {
  int k = 1;
  int m = 1;
  std::vector<ContinuityEntry> entries;
  bool holds = true;
};

/// m is 1-based. Both one-sided bounds lambda_m(V_n) - lambda_m(V) <= lambda_m(V) |W_n|
/// and lambda_m(V) - lambda_m(V_n) <= lambda_m(V_n) |W_n|.
inline ContinuityReport check_continuity_bound(const Potential& v, const std::vector<Perturbation>& ws, int k, int m,
                                               const Tolerances& tol, const Execution& exec = {}) {
  if (m < 1) throw InvalidArgument("m is 1-based and must be >= 1");
  const auto j = static_cast<std::size_t>(m - 1);
  ContinuityReport rep;
  rep.k = k;
  rep.m = m;
  rep.entries = detail::parallel_map<ContinuityEntry>(ws.size(), exec, [&](std::size_t i) {
    const PerturbedFamily fam(v, ws[i], k, j + 1, tol);
    const auto& p0 = fam.base().pairs[j];
    const auto pn = fam.solve(1.0, j + 1).pairs[j];
    ContinuityEntry e;
    e.w_norm = ws[i].sup();
    e.lambda_v = p0.lambda;
    e.lambda_vn = pn.lambda;
    e.upper_margin = e.lambda_v * e.w_norm - (e.lambda_vn - e.lambda_v);
    e.reverse_margin = e.lambda_vn * e.w_norm - (e.lambda_v - e.lambda_vn);
    e.err_est = p0.err_est + pn.err_est;
    e.holds = e.upper_margin >= 0.0 && e.reverse_margin >= 0.0;
    return e;
  });
  for (const auto& e : rep.entries) rep.holds = rep.holds && e.holds;
  return rep;
}

// ---------------------------------------------------------------------------
// Gap avoidance

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(lo < hi); }
  bool contains(double x, double margin) const { return x > lo + margin && x < hi - margin; }
};

struct GapReport {
  int k = 1;
  int m = 1;
  double lambda_m = 0.0;
  double kappa_m = 0.0;
  double radius = 0.0;  // k^2 sup B W
  Interval j_minus;     // certified: (lambda - kappa + r, lambda - r)
  Interval j_plus;      // certified: (lambda + r, lambda + kappa - r)
  Interval display_minus;  // (lambda - kappa, lambda - |k| sup B W)
  Interval display_plus;   // (lambda + |k| sup B W, lambda + kappa)
  std::vector<double> perturbed;  // perturbed eigenvalues in (lambda - kappa, lambda + kappa)
  std::vector<double> perturbed_err;
  int violations = 0;
  int display_intrusions = 0;
  bool undecided = false;
};

/// m is 1-based. Requires k^2 sup B W < kappa_m.
inline GapReport check_gap_avoidance(const Potential& v, const Perturbation& w, int k, int m, const Tolerances& tol) {
  if (m < 1) throw InvalidArgument("m is 1-based and must be >= 1");
  const auto j = static_cast<std::size_t>(m - 1);
  const PerturbedFamily fam(v, w, k, j + 2, tol);
  const auto& pairs = fam.base().pairs;
  GapReport rep;
  rep.k = k;
  rep.m = m;
  rep.lambda_m = pairs[j].lambda;
  rep.kappa_m = detail::level_gap(pairs, j);
  rep.radius = fam.radius();
  if (!(rep.radius < rep.kappa_m))
    throw PreconditionError("k^2 sup|B W| = " + detail::format_double(rep.radius) +
                            " is not below the gap kappa_m = " + detail::format_double(rep.kappa_m));
  const double lam = rep.lambda_m;
  const double r = rep.radius;
  const double kap = rep.kappa_m;
  rep.j_minus = {lam - kap + r, lam - r};
  rep.j_plus = {lam + r, lam + kap - r};
  const double display_r = std::abs(static_cast<double>(k)) * r / (static_cast<double>(k) * k);
  rep.display_minus = {lam - kap, lam - display_r};
  rep.display_plus = {lam + display_r, lam + kap};

  // Perturbed eigenvalues only move up (W >= 0); solve until past the window.
  std::size_t count = j + 2;
  Solution sol = fam.solve(1.0, count);
  while (sol.pairs.back().lambda < lam + kap) {
    count += 2;
    sol = fam.solve(1.0, count);
  }
  for (const auto& p : sol.pairs) {
    if (!(p.lambda > lam - kap && p.lambda < lam + kap)) continue;
    rep.perturbed.push_back(p.lambda);
    rep.perturbed_err.push_back(p.err_est);
    const double bar = 10.0 * (p.err_est + pairs[j].err_est);
    for (const Interval& iv : {rep.j_minus, rep.j_plus}) {
      if (iv.empty()) continue;
      if (iv.contains(p.lambda, bar))
        ++rep.violations;
      else if (iv.contains(p.lambda, -bar))
        rep.undecided = true;
    }
    for (const Interval& iv : {rep.display_minus, rep.display_plus})
      if (!iv.empty() && iv.contains(p.lambda, bar)) ++rep.display_intrusions;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Splitting a collision of the exact family

struct SplitMember {
  int k = 1;
  int n = 0;
  double lambda0 = 0.0;
  double lambda_t = 0.0;
  double err_est = 0.0;
  double hf_slope = 0.0;
};

struct SplitPair {
  int k = 1;
  int l = 2;
  double gap = 0.0;
  double err_bar = 0.0;
  double predicted = 0.0;  // t |slope_k - slope_l|
  double rel_deviation = 0.0;
  bool certified = false;
};

struct SplitReport {
  std::string s2;
  std::string e;
  double t = 0.0;
  std::vector<SplitMember> members;
  std::vector<SplitPair> pairs;
  Verdict verdict = Verdict::undecided;
};

/// Perturbs every distinct |k| contributing to the collision E of P_s by t x^2 W
/// and reports the resulting separations against first-order predictions.
inline SplitReport splitting_experiment(const ExactScalar& s2, const ExactScalar& e, const Perturbation& w, double t,
                                        const Tolerances& tol, const Execution& exec = {}) {
  if (!s2.is_rational()) throw InvalidArgument("splitting experiments need a rational s2");
  if (!(t >= 0.0)) throw InvalidArgument("t must be non-negative");
  const SpectrumLine line = multiplicity_enumeration(e, s2);
  std::vector<Contributor> reps;
  for (const auto& c : line.contributors)
    if (c.k > 0) reps.push_back(c);
  if (reps.size() < 2)
    throw PreconditionError("E=" + e.render() + " is not a collision between distinct k^2 (multiplicity " +
                            std::to_string(line.multiplicity()) + ")");
  const Potential v = Potential::shifted(s2);
  SplitReport rep;
  rep.s2 = s2.render();
  rep.e = e.render();
  rep.t = t;
  rep.members = detail::parallel_map<SplitMember>(reps.size(), exec, [&](std::size_t i) {
    const int k = static_cast<int>(reps[i].k);
    const auto n = static_cast<std::size_t>(reps[i].n);
    const PerturbedFamily fam(v, w, k, n + 1, tol);
    const auto pt = fam.solve(t, n + 1).pairs[n];
    SplitMember mbr;
    mbr.k = k;
    mbr.n = static_cast<int>(n);
    mbr.lambda0 = fam.base().pairs[n].lambda;
    mbr.lambda_t = pt.lambda;
    mbr.err_est = pt.err_est;
    mbr.hf_slope = fam.slope(fam.base(), n).first;
    return mbr;
  });
  bool all_certified = true;
  for (std::size_t a = 0; a < rep.members.size(); ++a)
    for (std::size_t b = a + 1; b < rep.members.size(); ++b) {
      const auto& x = rep.members[a];
      const auto& y = rep.members[b];
      SplitPair p;
      p.k = x.k;
      p.l = y.k;
      p.gap = std::abs(x.lambda_t - y.lambda_t);
      p.err_bar = x.err_est + y.err_est;
      p.predicted = t * std::abs(x.hf_slope - y.hf_slope);
      p.rel_deviation = p.predicted > 0.0 ? std::abs(p.gap - p.predicted) / p.predicted : 0.0;
      p.certified = p.gap > 10.0 * p.err_bar;
      all_certified = all_certified && p.certified;
      rep.pairs.push_back(p);
    }
  rep.verdict = all_certified ? Verdict::pass : Verdict::undecided;
  return rep;
}

}  // namespace grushin
