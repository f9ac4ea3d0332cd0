#pragma once

// 2D spectrum below a cap as the union over k of the 1D spectra, mirrored
// k -> -k, with exact or tolerance-based merging of coincident values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "detail/parallel.hpp"
#include "exact_family.hpp"
#include "schrod1d.hpp"

namespace grushin {

enum class AssemblyMode { exact, numeric };

inline std::string to_string(AssemblyMode m) { return m == AssemblyMode::exact ? "exact" : "numeric"; }

struct AssembledSpectrum {
  double e_max = 0.0;
  std::vector<SpectrumLine> lines;
  std::int64_t k_cut = 0;
  AssemblyMode mode = AssemblyMode::exact;
  Tolerances tol;
  std::vector<std::string> warnings;

  std::size_t undecided_count() const {
    return static_cast<std::size_t>(
        std::count_if(lines.begin(), lines.end(), [](const SpectrumLine& l) { return l.undecided; }));
  }
  std::size_t total_multiplicity() const {
    std::size_t s = 0;
    for (const auto& l : lines) s += l.multiplicity();
    return s;
  }
};

// ---------------------------------------------------------------------------
// k cutoff

namespace detail {

/// Ground-state energy of -d^2 + |x|^{2 gamma}; c_1 = 1 exactly.
inline double ground_constant(double gamma, const Tolerances& tol) {
  if (gamma == 1.0) return 1.0;
  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(gamma); it != cache.end()) return it->second;
  }
  const double c = solve_eigen(Potential::power(gamma), 1, 1, tol).front().lambda;
  std::lock_guard lock(mutex);
  cache.emplace(gamma, c);
  return c;
}

}  // namespace detail

/// Smallest K such that no |k| > K contributes an eigenvalue <= e_max.
/// Structured and exact-family potentials satisfy V >= |x|^{2 gamma}, so
/// lambda_0(P^k_V) >= c_gamma |k|^{2/(gamma+1)}. Other profiles (torus,
/// sampled) use lambda_0 nondecreasing in |k| and scan.
inline std::int64_t k_cutoff(const Potential& v, double e_max, const Tolerances& tol = {}) {
  if (!(e_max > 0.0) || !std::isfinite(e_max)) throw InvalidArgument("e_max must be positive and finite");
  if (v.geometry() == Geometry::cylinder && (v.is_structured() || v.is_exact_family())) {
    const double gamma = v.gamma();
    // Numerical c_gamma carries a relative error ~eig_rel; shade it down.
    const double c = gamma == 1.0 ? 1.0 : detail::ground_constant(gamma, tol) * (1.0 - 10.0 * tol.eig_rel);
    const double p = 2.0 / (gamma + 1.0);
    auto bound = [&](std::int64_t k) { return c * std::pow(static_cast<double>(k), p); };
    auto k = static_cast<std::int64_t>(std::floor(std::pow(e_max / c, 1.0 / p)));
    k = std::max<std::int64_t>(k, 1);
    while (k > 1 && bound(k) > e_max) --k;
    while (!(bound(k + 1) > e_max)) ++k;
    return k;
  }
  std::int64_t k = 1;
  while (true) {
    const double l0 = solve_eigen(v, static_cast<int>(k + 1), 1, tol).front().lambda;
    if (l0 > e_max) return k;
    ++k;
    if (k > 1000000) throw SolverError("k cutoff scan did not terminate");
  }
}

// ---------------------------------------------------------------------------
// Exact assembly

/// Spectrum of the exact family P_s below e_max. If lin_max is set, only
/// pairs with (2n+1)|k| <= lin_max are enumerated (e_max may then be infinite).
inline AssembledSpectrum assemble_exact(const ExactScalar& s2, double e_max,
                                        std::optional<std::int64_t> lin_max = std::nullopt) {
  if (s2.is_negative()) throw InvalidArgument("s2 must be non-negative");
  if (!(e_max > 0.0)) throw InvalidArgument("e_max must be positive");
  if (!std::isfinite(e_max) && !lin_max) throw InvalidArgument("infinite e_max needs a lin bound");
  struct Entry {
    ExactEigenvalue pair;
    Contributor who;
  };
  std::vector<Entry> entries;
  // "value <= e_max": doubles away from the cap, integers on near-ties.
  auto below = [&](const ExactEigenvalue& e) {
    if (!std::isfinite(e_max)) return true;
    const double val = e.value(s2);
    if (val < e_max * (1.0 - 1e-15)) return true;
    if (val > e_max * (1.0 + 1e-15)) return false;
    if (!s2.is_rational() || e_max != std::floor(e_max) || e_max > 9e15) return val <= e_max;
    const auto r = s2.as_rational();
    return static_cast<int128>(e.lin) * r.q + static_cast<int128>(e.quad) * r.p <=
           static_cast<int128>(e_max) * r.q;
  };
  std::int64_t k_cut = 0;
  for (std::int64_t k = 1;; ++k) {
    const auto base = exact_eigenvalue(k, 0, s2);
    const bool lin_ok = !lin_max || base.lin <= *lin_max;
    if (!lin_ok || !below(base)) break;
    k_cut = k;
    for (std::int64_t n = 0;; ++n) {
      const auto e = exact_eigenvalue(k, n);
      if ((lin_max && e.lin > *lin_max) || !below(e)) break;
      entries.push_back({e, {-k, n}});
      entries.push_back({e, {k, n}});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    const auto c = compare_exact(a.pair, b.pair, s2);
    if (c != std::strong_ordering::equal) return c == std::strong_ordering::less;
    return a.who < b.who;
  });
  AssembledSpectrum out;
  out.e_max = e_max;
  out.mode = AssemblyMode::exact;
  out.k_cut = std::max<std::int64_t>(k_cut, 1);
  for (std::size_t i = 0; i < entries.size();) {
    SpectrumLine line;
    line.value = entries[i].pair.value(s2);
    line.exact = render_exact(entries[i].pair, s2);
    std::size_t j = i;
    while (j < entries.size() && compare_exact(entries[j].pair, entries[i].pair, s2) == std::strong_ordering::equal)
      line.contributors.push_back(entries[j++].who);
    std::sort(line.contributors.begin(), line.contributors.end());
    out.lines.push_back(std::move(line));
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Numeric assembly

struct LevelValue {
  double lambda = 0.0;
  double err_est = 0.0;
  int k = 1;
  int n = 0;
};

/// Merges per-k levels (k > 0 only; mirrored here) into clustered lines.
inline AssembledSpectrum merge_levels(std::vector<LevelValue> levels, double e_max, const Tolerances& tol) {
  std::vector<LevelValue> all;
  all.reserve(2 * levels.size());
  for (const auto& l : levels) {
    all.push_back({l.lambda, l.err_est, -l.k, l.n});
    all.push_back(l);
  }
  std::sort(all.begin(), all.end(), [](const LevelValue& a, const LevelValue& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    const Contributor ca{a.k, a.n}, cb{b.k, b.n};
    return ca < cb;
  });
  AssembledSpectrum out;
  out.e_max = e_max;
  out.mode = AssemblyMode::numeric;
  out.tol = tol;
  std::vector<std::pair<double, double>> spans;  // (min, max) value per line
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j].lambda - all[j - 1].lambda <= tol.cluster_abs) ++j;
    SpectrumLine line;
    double sum = 0.0;
    for (std::size_t p = i; p < j; ++p) {
      sum += all[p].lambda;
      line.err_est = std::max(line.err_est, all[p].err_est);
      line.contributors.push_back({all[p].k, all[p].n});
    }
    line.value = sum / static_cast<double>(j - i);
    std::sort(line.contributors.begin(), line.contributors.end());
    if (tol.cluster_abs < 10.0 * line.err_est) {
      line.undecided = true;
      out.warnings.push_back("cluster at " + detail::format_double(line.value) +
                             ": cluster_abs is below 10x the eigenvalue error estimate " +
                             detail::format_double(line.err_est));
    }
    spans.emplace_back(all[i].lambda, all[j - 1].lambda);
    out.lines.push_back(std::move(line));
    i = j;
  }
  for (std::size_t i = 0; i + 1 < out.lines.size(); ++i) {
    const double gap = spans[i + 1].first - spans[i].second;
    if (gap < 3.0 * tol.cluster_abs) {
      out.lines[i].undecided = out.lines[i + 1].undecided = true;
      out.warnings.push_back("ambiguous clusters at " + detail::format_double(out.lines[i].value) + " and " +
                             detail::format_double(out.lines[i + 1].value) + " (gap " +
                             detail::format_double(gap) + ")");
    }
  }
  // Lines sitting on the cap are kept; their members may straddle it within cluster_abs.
  std::erase_if(out.lines, [&](const SpectrumLine& l) { return l.value > e_max + tol.cluster_abs; });
  return out;
}

/// Numeric spectrum of P_V below e_max: per-k solves in parallel, then a
/// sequential merge.
inline AssembledSpectrum assemble_numeric(const Potential& v, double e_max, const Tolerances& tol,
                                          const Execution& exec = {}, const SolverOptions& opts = {}) {
  tol.validate();
  const std::int64_t k_cut = k_cutoff(v, e_max, tol);
  const double cap = e_max + tol.cluster_abs;
  const auto per_k = detail::parallel_map<std::vector<LevelValue>>(
      static_cast<std::size_t>(k_cut), exec, [&](std::size_t i) {
        const int k = static_cast<int>(i + 1);
        std::vector<LevelValue> out;
        for (const auto& p : solve_eigen_below(v, k, cap, tol, opts).pairs)
          out.push_back({p.lambda, p.err_est, k, p.n});
        return out;
      });
  std::vector<LevelValue> levels;
  for (const auto& l : per_k) levels.insert(levels.end(), l.begin(), l.end());
  auto out = merge_levels(std::move(levels), e_max, tol);
  out.k_cut = k_cut;
  return out;
}

/// Exact mode requires an exact-family potential.
inline AssembledSpectrum assemble(const Potential& v, double e_max, AssemblyMode mode, const Tolerances& tol,
                                  const Execution& exec = {}) {
  if (mode == AssemblyMode::exact) {
    if (!v.is_exact_family()) throw InvalidArgument("exact assembly needs a shifted:s2=... potential");
    auto out = assemble_exact(v.s2(), e_max);
    out.tol = tol;
    return out;
  }
  return assemble_numeric(v, e_max, tol, exec);
}

// ---------------------------------------------------------------------------
// Property (P): spec_n(P^k) and spec_n(P^l) disjoint for k < l.

enum class Verdict { pass, fail, undecided };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    default: return "UNDECIDED";
  }
}

struct Collision {
  int k = 1;
  int i = 0;  // level of P^k
  int l = 2;
  int j = 0;  // level of P^l
  double value_k = 0.0;
  double value_l = 0.0;
  double gap = 0.0;
  double err_bar = 0.0;
  Verdict verdict = Verdict::undecided;
};

struct PropertyReport {
  int levels = 0;
  int k_range = 0;
  bool exact = false;
  std::vector<Collision> collisions;
  Verdict verdict = Verdict::pass;
};

/// Exact for exact-family potentials, numeric otherwise. In numeric mode a
/// near-collision (gap <= cluster_abs) is PASS when gap > 10 err, else UNDECIDED.
inline PropertyReport check_property_P(const Potential& v, int n, int k_range, const Tolerances& tol,
                                       const Execution& exec = {}) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (k_range < 2) throw InvalidArgument("k_range must be >= 2");
  tol.validate();
  PropertyReport rep;
  rep.levels = n;
  rep.k_range = k_range;
  rep.exact = v.is_exact_family();
  if (rep.exact) {
    const auto& s2 = v.s2();
    for (int k = 1; k <= k_range; ++k)
      for (int l = k + 1; l <= k_range; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const auto a = exact_eigenvalue(k, i);
            const auto b = exact_eigenvalue(l, j);
            if (compare_exact(a, b, s2) == std::strong_ordering::equal)
              rep.collisions.push_back({k, i, l, j, a.value(s2), b.value(s2), 0.0, 0.0, Verdict::fail});
          }
    rep.verdict = rep.collisions.empty() ? Verdict::pass : Verdict::fail;
    return rep;
  }
  const auto spectra = detail::parallel_map<std::vector<EigenPair>>(
      static_cast<std::size_t>(k_range), exec,
      [&](std::size_t idx) { return solve_eigen(v, static_cast<int>(idx + 1), static_cast<std::size_t>(n), tol); });
  for (int k = 1; k <= k_range; ++k)
    for (int l = k + 1; l <= k_range; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const auto& a = spectra[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i)];
          const auto& b = spectra[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(j)];
          const double gap = std::abs(a.lambda - b.lambda);
          if (gap > tol.cluster_abs) continue;
          const double bar = a.err_est + b.err_est;
          const Verdict verdict = gap > 10.0 * bar ? Verdict::pass : Verdict::undecided;
          rep.collisions.push_back({k, i, l, j, a.lambda, b.lambda, gap, bar, verdict});
          if (verdict == Verdict::undecided) rep.verdict = Verdict::undecided;
        }
  return rep;
}

}  // namespace grushin
