#pragma once

// Eigensolver for P^k_V = -d^2/dx^2 + k^2 V(x) on a truncated line (Dirichlet)
// or on the circle (periodic). Second-order central differences; bisection on
// the matrix inertia for eigenvalues; inverse iteration for eigenvectors; one
// Richardson step across h and h/2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"

namespace grushin {

// ---------------------------------------------------------------------------
// Grid

class Grid {
 public:
  enum class Kind { line, circle };

  /// N interior nodes of (-L, L); the endpoints carry the Dirichlet condition.
  static Grid line(double half_length, std::size_t nodes) {
    if (!(half_length > 0.0)) throw InvalidArgument("line grid needs L > 0");
    if (nodes < 16) throw InvalidArgument("grid needs at least 16 nodes");
    return Grid(Kind::line, half_length, nodes);
  }

  /// N nodes uniformly covering [-pi, pi).
  static Grid circle(std::size_t nodes) {
    if (nodes < 16) throw InvalidArgument("grid needs at least 16 nodes");
    return Grid(Kind::circle, pi, nodes);
  }

  Kind kind() const { return kind_; }
  bool is_line() const { return kind_ == Kind::line; }
  double half_length() const { return half_length_; }
  std::size_t size() const { return nodes_; }

  double spacing() const {
    return is_line() ? 2.0 * half_length_ / static_cast<double>(nodes_ + 1)
                     : 2.0 * pi / static_cast<double>(nodes_);
  }

  double node(std::size_t i) const {
    const double h = spacing();
    return is_line() ? -half_length_ + h * static_cast<double>(i + 1)
                     : -pi + h * static_cast<double>(i);
  }

  std::vector<double> coordinates() const {
    std::vector<double> xs(nodes_);
    for (std::size_t i = 0; i < nodes_; ++i) xs[i] = node(i);
    return xs;
  }

  /// Same domain, half the spacing; every old node is a node of the result.
  Grid refined() const {
    return is_line() ? Grid(Kind::line, half_length_, 2 * nodes_ + 1)
                     : Grid(Kind::circle, pi, 2 * nodes_);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Grid(Kind kind, double half_length, std::size_t nodes)
      : kind_(kind), half_length_(half_length), nodes_(nodes) {}

  Kind kind_ = Kind::line;
  double half_length_ = 1.0;
  std::size_t nodes_ = 16;
};

template <class F>
std::vector<double> sample(const Grid& grid, F&& f) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
  return out;
}

/// Discrete inner product h * sum a_i b_i.
inline double grid_dot(const Grid& grid, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return grid.spacing() * s;
}

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> u;  // grid values, h * sum u^2 = 1
  int k = 1;
  int n = 0;
  double err_est = 0.0;
  Grid grid = Grid::line(1.0, 16);
};

struct SolverOptions {
  double margin = 8.0;  // truncation threshold multiple of e_max (before the safety doubling)
  std::size_t max_nodes = std::size_t{1} << 22;
  double tail_tolerance = 1e-7;  // max |u| on the outer 10% relative to max |u|
};

// ---------------------------------------------------------------------------
// Discrete layer: kv holds k^2 V at the grid nodes.

struct DiscreteEigen {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};

namespace detail {

/// Solves a general tridiagonal system with partial pivoting (LAPACK gtsv).
/// Zero pivots are replaced by `tiny` so near-singular shifts stay usable.
inline void solve_tridiagonal(std::vector<double> dl, std::vector<double> d, std::vector<double> du,
                              std::vector<double>& b, double tiny) {
  const std::size_t n = d.size();
  if (n == 1) {
    b[0] /= (d[0] != 0.0 ? d[0] : tiny);
    return;
  }
  std::vector<double> du2(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = tiny;
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
      du2[i] = 0.0;
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du2[i];
      }
      du[i] = temp;
      const double tb = b[i];
      b[i] = b[i + 1];
      b[i + 1] = tb - fact * b[i + 1];
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = tiny;
  b[n - 1] /= d[n - 1];
  b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (std::size_t ii = n - 2; ii-- > 0;) {
    b[ii] = (b[ii] - du[ii] * b[ii + 1] - du2[ii] * b[ii + 2]) / d[ii];
  }
}

/// Deterministic start vector with no symmetry.
inline std::vector<double> start_vector(std::size_t n, std::size_t salt) {
  std::vector<double> v(n);
  std::uint64_t s = 0x9E3779B97F4A7C15ULL ^ (salt * 0xBF58476D1CE4E5B9ULL);
  for (std::size_t i = 0; i < n; ++i) {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    const std::uint64_t r = s * 0x2545F4914F6CDD1DULL;
    v[i] = 0.5 + static_cast<double>(r >> 11) * 0x1.0p-53;
  }
  return v;
}

inline void normalize(const Grid& grid, std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  const double scale = 1.0 / std::sqrt(grid.spacing() * s);
  for (double& x : u) x *= scale;
}

/// First component with |u_i| >= 1e-8 max|u| is made positive.
inline void fix_sign(std::vector<double>& u) {
  double mx = 0.0;
  for (double x : u) mx = std::max(mx, std::abs(x));
  for (double x : u) {
    if (std::abs(x) >= 1e-8 * mx) {
      if (x < 0.0)
        for (double& y : u) y = -y;
      return;
    }
  }
}

/// <u, T u> / <u, u> in gradient form; every term is non-negative.
inline double rayleigh_quotient(const Grid& grid, std::span<const double> kv, std::span<const double> u) {
  const std::size_t n = u.size();
  const double h2 = grid.spacing() * grid.spacing();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += kv[i] * u[i] * u[i];
    den += u[i] * u[i];
  }
  double grad = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = u[i + 1] - u[i];
    grad += d * d;
  }
  if (grid.is_line()) {
    grad += u.front() * u.front() + u.back() * u.back();
  } else {
    const double d = u.front() - u.back();
    grad += d * d;
  }
  return (num + grad / h2) / den;
}

/// Number of eigenvalues below mu (Sylvester inertia of T - mu). On the
/// circle the last row is bordered: inertia of the leading tridiagonal block
/// plus the sign of its Schur complement.
inline std::size_t sturm_count(const Grid& grid, std::span<const double> kv, double mu) {
  const double h = grid.spacing();
  const double off = -1.0 / (h * h);
  const double off2 = off * off;
  const double diag0 = 2.0 / (h * h);
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, off2);
  const std::size_t n = kv.size();
  const std::size_t block = grid.is_line() ? n : n - 1;
  std::size_t count = 0;
  double q = diag0 + kv[0] - mu;
  if (q < 0.0) ++count;
  // y = L^{-1} b for the border column b = off * (e_0 + e_{n-2}).
  double y = off;
  double schur = 0.0;
  for (std::size_t i = 1; i < block; ++i) {
    if (std::abs(q) < pivmin) q = -pivmin;
    if (!grid.is_line()) {
      schur += y * y / q;
      y = (i + 1 == block ? off : 0.0) - (off / q) * y;
    }
    q = (diag0 + kv[i] - mu) - off2 / q;
    if (q < 0.0) ++count;
  }
  if (!grid.is_line()) {
    if (std::abs(q) < pivmin) q = -pivmin;
    schur += y * y / q;
    if ((diag0 + kv[n - 1] - mu) - schur < 0.0) ++count;
  }
  return count;
}

inline std::vector<double> bisect_eigenvalues(const Grid& grid, std::span<const double> kv, std::size_t count) {
  std::vector<double> values(count);
  if (count == 0) return values;
  const double lower = *std::min_element(kv.begin(), kv.end()) - 1.0;
  double upper = std::max(1.0, lower + 2.0);
  while (sturm_count(grid, kv, upper) < count) {
    upper *= 2.0;
    if (!std::isfinite(upper)) throw SolverError("Sturm bracket overflow");
  }
  double prev = lower;
  for (std::size_t j = 0; j < count; ++j) {
    double lo = prev;
    double hi = upper;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (hi - lo <= 1e-13 * std::max(std::abs(lo), std::abs(hi)) || mid == lo || mid == hi) break;
      if (sturm_count(grid, kv, mid) >= j + 1)
        hi = mid;
      else
        lo = mid;
    }
    values[j] = 0.5 * (lo + hi);
    prev = lo;
  }
  return values;
}

/// (T - sigma) x = b for the line or periodic matrix (Sherman-Morrison for the corners).
inline void shifted_solve(const Grid& grid, std::span<const double> kv, double sigma, std::vector<double>& b) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double inv_h2 = 1.0 / (h * h);
  const double tiny = std::numeric_limits<double>::epsilon() * 4.0 * inv_h2;
  std::vector<double> off(n - 1, -inv_h2);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 * inv_h2 + kv[i] - sigma;
  if (grid.is_line()) {
    solve_tridiagonal(off, diag, off, b, tiny);
    return;
  }
  const double corner = -inv_h2;
  double gamma = -diag[0];
  if (std::abs(gamma) < tiny) gamma = -inv_h2;
  auto bb = diag;
  bb[0] -= gamma;
  bb[n - 1] -= corner * corner / gamma;
  solve_tridiagonal(off, bb, off, b, tiny);
  std::vector<double> z(n, 0.0);
  z[0] = gamma;
  z[n - 1] = corner;
  solve_tridiagonal(off, bb, off, z, tiny);
  const double fact = (b[0] + corner * b[n - 1] / gamma) / (1.0 + z[0] + corner * z[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) b[i] -= fact * z[i];
}

}  // namespace detail

/// Lowest `count` eigenpairs of the discrete operator on `grid`. Eigenvalues
/// are polished by the Rayleigh quotient of the inverse-iteration vector.
inline DiscreteEigen discrete_eigen(const Grid& grid, std::span<const double> kv, std::size_t count,
                                    bool with_vectors = true) {
  if (kv.size() != grid.size()) throw InvalidArgument("potential samples do not match grid");
  if (count > grid.size()) throw InvalidArgument("more levels requested than grid nodes");
  DiscreteEigen out;
  out.values = detail::bisect_eigenvalues(grid, kv, count);
  if (!with_vectors) return out;
  out.vectors.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double lam = out.values[j];
    auto x = detail::start_vector(grid.size(), j);
    // Previously computed vectors in the same cluster are projected out.
    std::vector<std::size_t> cluster;
    for (std::size_t i = 0; i < j; ++i)
      if (std::abs(out.values[i] - lam) <= 1e-6 * std::max(1.0, std::abs(lam))) cluster.push_back(i);
    for (int it = 0; it < 4; ++it) {
      detail::shifted_solve(grid, kv, lam, x);
      for (std::size_t i : cluster) {
        const double c = grid_dot(grid, x, out.vectors[i]);
        for (std::size_t p = 0; p < x.size(); ++p) x[p] -= c * out.vectors[i][p];
      }
      detail::normalize(grid, x);
    }
    detail::fix_sign(x);
    out.values[j] = detail::rayleigh_quotient(grid, kv, x);
    out.vectors[j] = std::move(x);
  }
  return out;
}

inline std::vector<double> scaled_samples(const Grid& grid, const Potential& v, int k) {
  const double k2 = static_cast<double>(k) * static_cast<double>(k);
  return sample(grid, [&](double x) { return k2 * v(x); });
}

// ---------------------------------------------------------------------------
// Truncation

/// Smallest L on a geometric grid (ratio 1.001) with k^2 min(V(L), V(-L)) >= margin * e_max.
inline double truncation_length(const Potential& v, int k, double e_max, double margin) {
  if (v.geometry() == Geometry::torus)
    throw InvalidArgument("truncation length is not defined on the circle");
  if (k == 0) throw InvalidArgument("k must be nonzero");
  if (!(e_max > 0.0)) throw InvalidArgument("e_max must be positive");
  if (!(margin >= 2.0)) throw InvalidArgument("margin must be >= 2");
  const double k2 = static_cast<double>(k) * static_cast<double>(k);
  const double threshold = margin * e_max;
  constexpr double ratio = 1.001;
  for (double length = 1e-3; length <= 1e7; length *= ratio) {
    if (k2 * std::min(v(length), v(-length)) >= threshold) return length;
  }
  throw SolverError("potential is not confining: k^2 V never reaches " +
                    detail::format_double(threshold) + " within |x| <= 1e7");
}

// ---------------------------------------------------------------------------
// Richardson pair solves

struct GridPair {
  Grid coarse;
  Grid fine;
};

struct Solution {
  std::vector<EigenPair> pairs;  // extrapolated eigenvalues, fine-grid vectors
  GridPair grids;
  DiscreteEigen coarse;
  DiscreteEigen fine;
};

/// Richardson combination of discrete solves on a fixed grid pair.
/// kv_* hold k^2 V on each grid.
inline Solution solve_fixed(const GridPair& grids, std::span<const double> kv_coarse,
                            std::span<const double> kv_fine, int k, std::size_t count) {
  Solution sol{{}, grids, discrete_eigen(grids.coarse, kv_coarse, count),
               discrete_eigen(grids.fine, kv_fine, count)};
  sol.pairs.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double lc = sol.coarse.values[j];
    const double lf = sol.fine.values[j];
    auto& p = sol.pairs[j];
    p.lambda = (4.0 * lf - lc) / 3.0;
    p.err_est = std::abs(lf - lc) / 3.0;
    p.u = sol.fine.vectors[j];
    p.k = k;
    p.n = static_cast<int>(j);
    p.grid = grids.fine;
  }
  return sol;
}

namespace detail {

inline bool tails_decayed(const std::vector<double>& u, double tol) {
  const std::size_t n = u.size();
  const std::size_t band = std::max<std::size_t>(1, n / 10);
  double mx = 0.0;
  for (double x : u) mx = std::max(mx, std::abs(x));
  double edge = 0.0;
  for (std::size_t i = 0; i < band; ++i) edge = std::max({edge, std::abs(u[i]), std::abs(u[n - 1 - i])});
  return edge <= tol * mx;
}

inline double initial_energy_guess(const Potential& v, int k, std::size_t m) {
  const double ak = std::abs(static_cast<double>(k));
  return ak * (2.0 * static_cast<double>(m) + 1.0) + ak * ak * std::max(0.0, v(0.0)) + 1.0;
}

inline std::size_t line_nodes_for(double half_length, double h) {
  return std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(2.0 * half_length / h)) - 1);
}

}  // namespace detail

/// The m lowest eigenpairs of P^k_V, refined until err_est <= eig_rel * lambda.
inline Solution solve_eigen_detailed(const Potential& v, int k, std::size_t m, const Tolerances& tol,
                                     const SolverOptions& opts = {}) {
  if (k == 0) throw InvalidArgument("k must be nonzero");
  if (m == 0) throw InvalidArgument("at least one level must be requested");
  tol.validate();

  const bool circle = v.geometry() == Geometry::torus;
  double energy = detail::initial_energy_guess(v, k, m);
  double half_length = pi;
  double h = 0.0;

  // Domain: grow the energy guess until the m-th coarse eigenvalue lies below it.
  for (int attempt = 0;; ++attempt) {
    if (attempt > 60) throw SolverError("could not bracket the requested levels");
    h = std::min(0.5 / std::sqrt(energy), circle ? 2.0 * pi / 64.0 : 1.0);
    Grid g = Grid::circle(16);
    if (circle) {
      std::size_t n = 64;
      while (2.0 * pi / static_cast<double>(n) > h) n *= 2;
      n = std::max(n, 2 * m + 16);
      if (n > opts.max_nodes) throw SolverError("circle grid would exceed the node budget");
      g = Grid::circle(n);
      h = g.spacing();
    } else {
      half_length = 2.0 * truncation_length(v, k, energy, opts.margin);
      h = std::min(h, half_length / 16.0);
      const std::size_t n = std::max(detail::line_nodes_for(half_length, h), 4 * m + 16);
      if (n > opts.max_nodes) throw SolverError("line grid would exceed the node budget");
      g = Grid::line(half_length, n);
      h = g.spacing();
    }
    const auto kv = scaled_samples(g, v, k);
    const auto vals = discrete_eigen(g, kv, m, false).values;
    if (vals.back() <= energy) break;
    energy = 2.0 * vals.back();
  }

  Grid coarse = circle ? Grid::circle(static_cast<std::size_t>(std::llround(2.0 * pi / h)))
                       : Grid::line(half_length, detail::line_nodes_for(half_length, h));
  std::vector<double> best;
  for (int round = 0; round < 64; ++round) {
    const Grid fine = coarse.refined();
    if (fine.size() > opts.max_nodes)
      throw SolverError("eigenvalue refinement exceeded the node budget (" + std::to_string(opts.max_nodes) + ")",
                        best);
    const auto kvc = scaled_samples(coarse, v, k);
    const auto kvf = scaled_samples(fine, v, k);
    Solution sol = solve_fixed({coarse, fine}, kvc, kvf, k, m);
    best.clear();
    for (const auto& p : sol.pairs) best.push_back(p.lambda);

    if (!circle) {
      bool ok = true;
      for (const auto& p : sol.pairs) ok = ok && detail::tails_decayed(p.u, opts.tail_tolerance);
      if (!ok) {
        half_length *= 2.0;
        coarse = Grid::line(half_length, 2 * coarse.size() + 1);
        continue;
      }
    }

    double worst = 0.0;
    for (const auto& p : sol.pairs)
      worst = std::max(worst, p.err_est / (tol.eig_rel * std::max(std::abs(p.lambda), 1e-300)));
    if (worst <= 1.0) {
      for (std::size_t j = 0; j + 1 < sol.pairs.size(); ++j) {
        const auto& a = sol.pairs[j];
        const auto& b = sol.pairs[j + 1];
        if (circle) continue;  // the circle may carry genuine near-doubles
        if (b.lambda - a.lambda <= 10.0 * std::max(a.err_est, b.err_est))
          throw SolverError("discretization fault: levels " + std::to_string(j) + " and " +
                                std::to_string(j + 1) + " are not resolved as simple",
                            best);
      }
      return sol;
    }
    // err ~ h^2: jump to the spacing predicted to meet the target.
    const double shrink = std::min(16.0, 1.2 * std::sqrt(worst));
    const double h_next = coarse.spacing() / std::max(shrink, 2.0);
    if (circle) {
      std::size_t n = coarse.size();
      while (2.0 * pi / static_cast<double>(n) > h_next) n *= 2;
      coarse = Grid::circle(n);
    } else {
      coarse = Grid::line(half_length, detail::line_nodes_for(half_length, h_next));
    }
  }
  throw SolverError("eigenvalue refinement did not converge", best);
}

inline std::vector<EigenPair> solve_eigen(const Potential& v, int k, std::size_t m, const Tolerances& tol,
                                          const SolverOptions& opts = {}) {
  return solve_eigen_detailed(v, k, m, tol, opts).pairs;
}

/// All eigenpairs of P^k_V with lambda <= cap (plus one level above it in the Solution).
inline Solution solve_eigen_below(const Potential& v, int k, double cap, const Tolerances& tol,
                                  const SolverOptions& opts = {}) {
  if (!(cap > 0.0)) throw InvalidArgument("energy cap must be positive");
  std::size_t m = 1;
  // Coarse count of levels below the cap.
  if (v.geometry() == Geometry::cylinder) {
    const double half_length = 2.0 * truncation_length(v, k, cap, opts.margin);
    const double h = std::min(0.5 / std::sqrt(cap), half_length / 16.0);
    const Grid g = Grid::line(half_length, detail::line_nodes_for(half_length, h));
    m = detail::sturm_count(g, scaled_samples(g, v, k), cap) + 1;
  }
  for (;;) {
    Solution sol = solve_eigen_detailed(v, k, m, tol, opts);
    if (sol.pairs.back().lambda > cap) {
      std::size_t keep = 0;
      while (keep < sol.pairs.size() && sol.pairs[keep].lambda <= cap) ++keep;
      sol.pairs.resize(keep);
      return sol;
    }
    m *= 2;
  }
}

// ---------------------------------------------------------------------------
// Rayleigh quotients and closed forms

/// Largest Rayleigh quotient of the discrete P^k_V over span(basis).
inline double rayleigh_max(const Potential& v, int k, const Grid& grid,
                           const std::vector<std::vector<double>>& basis) {
  if (basis.empty()) throw InvalidArgument("empty basis");
  const auto kv = scaled_samples(grid, v, k);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a(dim, dim);
  Eigen::MatrixXd b(dim, dim);
  const double h2 = grid.spacing() * grid.spacing();
  const std::size_t n = grid.size();
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& ui = basis[static_cast<std::size_t>(i)];
    if (ui.size() != n) throw InvalidArgument("basis vector does not match grid");
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& uj = basis[static_cast<std::size_t>(j)];
      double pot = 0.0;
      double mass = 0.0;
      double grad = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        pot += kv[p] * ui[p] * uj[p];
        mass += ui[p] * uj[p];
      }
      for (std::size_t p = 0; p + 1 < n; ++p) grad += (ui[p + 1] - ui[p]) * (uj[p + 1] - uj[p]);
      if (grid.is_line())
        grad += ui.front() * uj.front() + ui.back() * uj.back();
      else
        grad += (ui.front() - ui.back()) * (uj.front() - uj.back());
      a(i, j) = a(j, i) = pot + grad / h2;
      b(i, j) = b(j, i) = mass;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(b, Eigen::EigenvaluesOnly);
  const double lo = gram.eigenvalues().minCoeff();
  const double hi = gram.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * hi)) throw InvalidArgument("rank-deficient basis");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(a, b, Eigen::EigenvaluesOnly);
  return ges.eigenvalues().maxCoeff();
}

/// Normalized harmonic-oscillator eigenfunction of -d^2 + k^2 x^2:
/// |k|^{1/4} psi_n(x sqrt|k|), psi_n the orthonormal Hermite functions.
inline double hermite_eigenfunction(int k, int n, double x) {
  if (n < 0) throw InvalidArgument("level must be non-negative");
  if (k == 0) throw InvalidArgument("k must be nonzero");
  const double ak = std::abs(static_cast<double>(k));
  const double xi = x * std::sqrt(ak);
  // psi_{j+1} = sqrt(2/(j+1)) xi psi_j - sqrt(j/(j+1)) psi_{j-1}
  double prev = 0.0;
  double cur = std::pow(pi, -0.25) * std::exp(-0.5 * xi * xi);
  for (int j = 0; j < n; ++j) {
    const double jj = j;
    const double next = std::sqrt(2.0 / (jj + 1.0)) * xi * cur - std::sqrt(jj / (jj + 1.0)) * prev;
    prev = cur;
    cur = next;
  }
  return std::pow(ak, 0.25) * cur;
}

}  // namespace grushin
