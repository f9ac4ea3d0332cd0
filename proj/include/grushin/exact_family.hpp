#pragma once

// Closed-form spectrum of P_s = -d^2/dx^2 + k^2 (x^2 + s^2):
// E = (2n+1)|k| + k^2 s^2, held exactly as the integer pair (lin, quad).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "detail/parallel.hpp"

namespace grushin {

using int128 = __int128;

struct ExactEigenvalue {
  std::int64_t lin = 1;   // (2n+1)|k|
  std::int64_t quad = 1;  // k^2

  double value(const ExactScalar& s2) const {
    return static_cast<double>(lin) + static_cast<double>(quad) * s2.value();
  }

  friend bool operator==(const ExactEigenvalue&, const ExactEigenvalue&) = default;
};

struct Contributor {
  std::int64_t k = 1;
  std::int64_t n = 0;

  friend bool operator==(const Contributor&, const Contributor&) = default;
  /// Ordered by (|k|, k, n).
  friend bool operator<(const Contributor& a, const Contributor& b) {
    const auto ak = a.k < 0 ? -a.k : a.k;
    const auto bk = b.k < 0 ? -b.k : b.k;
    return std::tie(ak, a.k, a.n) < std::tie(bk, b.k, b.n);
  }
};

struct SpectrumLine {
  double value = 0.0;
  std::string exact;  // exact rendering in exact mode, empty otherwise
  std::vector<Contributor> contributors;
  double err_est = 0.0;
  bool undecided = false;

  std::size_t multiplicity() const { return contributors.size(); }
};

inline ExactEigenvalue exact_eigenvalue(std::int64_t k, std::int64_t n) {
  if (k == 0) throw InvalidArgument("k must be nonzero");
  if (n < 0) throw InvalidArgument("level must be non-negative");
  const std::int64_t ak = detail::checked_abs(k);
  const std::int64_t odd = detail::checked_add(detail::checked_mul(2, n), 1);
  return {detail::checked_mul(odd, ak), detail::checked_mul(ak, ak)};
}

/// The pair does not depend on s2; it is checked for admissibility only.
inline ExactEigenvalue exact_eigenvalue(std::int64_t k, std::int64_t n, const ExactScalar& s2) {
  if (s2.is_negative()) throw InvalidArgument("s2 must be non-negative");
  return exact_eigenvalue(k, n);
}

/// Exact rendering of lin + quad * s2.
inline std::string render_exact(const ExactEigenvalue& e, const ExactScalar& s2) {
  if (s2.is_rational()) {
    const auto& r = s2.as_rational();
    const int128 num = static_cast<int128>(e.lin) * r.q + static_cast<int128>(e.quad) * r.p;
    if (num > INT64_MAX || num < INT64_MIN) throw OverflowError("exact value exceeds 64 bits");
    return ExactScalar::rational(static_cast<std::int64_t>(num), r.q).render();
  }
  return std::to_string(e.lin) + "+" + std::to_string(e.quad) + "*" + s2.render();
}

namespace detail {

/// Sign of a + b*sqrt(radicand).
inline int sign_linear_sqrt(int128 a, int128 b, std::int64_t radicand) {
  if (b == 0) return a > 0 ? 1 : (a < 0 ? -1 : 0);
  if (a >= 0 && b > 0) return 1;
  if (a <= 0 && b < 0) return -1;
  // Opposite signs: compare a^2 with b^2 * radicand.
  const int128 lhs = a * a;
  const int128 rhs = b * b * radicand;
  if (lhs == rhs) return 0;  // impossible for non-square radicand
  const int mag = lhs > rhs ? 1 : -1;
  return a > 0 ? mag : -mag;
}

}  // namespace detail

/// Exact ordering of two eigenvalues of the same family.
inline std::strong_ordering compare_exact(const ExactEigenvalue& x, const ExactEigenvalue& y,
                                          const ExactScalar& s2) {
  const int128 dl = static_cast<int128>(x.lin) - y.lin;
  const int128 dq = static_cast<int128>(x.quad) - y.quad;
  int sign = 0;
  if (s2.is_rational()) {
    const auto& r = s2.as_rational();
    const int128 d = dl * r.q + dq * r.p;
    sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
  } else {
    sign = detail::sign_linear_sqrt(dl, dq, s2.as_irrational().radicand);
  }
  return sign < 0 ? std::strong_ordering::less
                  : (sign > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

// ---------------------------------------------------------------------------
// Multiplicity at s = 0

/// Exponents of the odd prime factors of e (trial division).
inline std::vector<int> odd_prime_exponents(std::int64_t e) {
  if (e <= 0) throw InvalidArgument("E must be a positive integer");
  while (e % 2 == 0) e /= 2;
  std::vector<int> alphas;
  for (std::int64_t p = 3; p <= e / p; p += 2) {
    int a = 0;
    while (e % p == 0) {
      e /= p;
      ++a;
    }
    if (a > 0) alphas.push_back(a);
  }
  if (e > 1) alphas.push_back(1);
  return alphas;
}

/// Multiplicity of E in spec(P_0): one (k, n) pair per odd divisor 2n+1 of E,
/// doubled for k -> -k, i.e. 2 * prod(1 + alpha_i) over the odd primes.
inline std::int64_t multiplicity_factorization(std::int64_t e) {
  std::int64_t m = 2;
  for (int a : odd_prime_exponents(e)) m = detail::checked_mul(m, a + 1);
  return m;
}

/// 2 [sum alpha_i + sum_{i<j} alpha_i alpha_j + 1]. Agrees with the divisor
/// count only while E has at most two distinct odd prime factors.
inline std::int64_t multiplicity_pairwise_formula(std::int64_t e) {
  const auto alphas = odd_prime_exponents(e);
  std::int64_t s = 1;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    s += alphas[i];
    for (std::size_t j = i + 1; j < alphas.size(); ++j) s += alphas[i] * alphas[j];
  }
  return 2 * s;
}

// ---------------------------------------------------------------------------
// Enumeration

/// All (k, n) with (2n+1)|k| + k^2 s2 = target, for rational s2 and target.
inline SpectrumLine multiplicity_enumeration(const ExactScalar& target, const ExactScalar& s2) {
  if (!target.is_rational() || !s2.is_rational())
    throw InvalidArgument("value enumeration needs a rational target and rational s2");
  const auto t = target.as_rational();
  const auto s = s2.as_rational();
  SpectrumLine line;
  line.value = target.value();
  line.exact = target.render();
  // (2n+1) k = t - k^2 s  <=>  (2n+1) k * t.q * s.q = t.p * s.q - k^2 s.p * t.q
  for (int128 k = 1;; ++k) {
    const int128 rest = static_cast<int128>(t.p) * s.q - k * k * s.p * t.q;
    const int128 unit = k * t.q * s.q;
    if (rest < unit) break;
    if (rest % unit != 0) continue;
    const int128 odd = rest / unit;
    if (odd % 2 == 0) continue;
    const auto kk = static_cast<std::int64_t>(k);
    const auto n = static_cast<std::int64_t>((odd - 1) / 2);
    line.contributors.push_back({-kk, n});
    line.contributors.push_back({kk, n});
  }
  std::sort(line.contributors.begin(), line.contributors.end());
  return line;
}

/// All (k, n) whose exact eigenvalue equals `pair` under s2. For irrational
/// s2 equality of values is equality of pairs.
inline SpectrumLine multiplicity_enumeration(const ExactEigenvalue& pair, const ExactScalar& s2) {
  if (s2.is_rational()) {
    const auto& r = s2.as_rational();
    const int128 num = static_cast<int128>(pair.lin) * r.q + static_cast<int128>(pair.quad) * r.p;
    if (num > INT64_MAX) throw OverflowError("exact value exceeds 64 bits");
    return multiplicity_enumeration(ExactScalar::rational(static_cast<std::int64_t>(num), r.q), s2);
  }
  SpectrumLine line;
  line.value = pair.value(s2);
  line.exact = render_exact(pair, s2);
  if (pair.quad > 0 && detail::is_perfect_square(pair.quad)) {
    const auto k = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(pair.quad))));
    if (pair.lin % k == 0 && (pair.lin / k) % 2 == 1) {
      const std::int64_t n = (pair.lin / k - 1) / 2;
      line.contributors = {{-k, n}, {k, n}};
    }
  }
  return line;
}

// ---------------------------------------------------------------------------
// Counting and Weyl asymptotics

/// N(E) = #{(k, n) : (2n+1)|k| + k^2 s2 <= E}, k ranging over nonzero integers.
inline std::int64_t counting_function(double e, const ExactScalar& s2) {
  if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("E must be positive and finite");
  if (s2.is_negative()) throw InvalidArgument("s2 must be non-negative");
  const double sv = s2.value();
  // k-range cutoff min(E, sqrt(E)/s); terms beyond the true cutoff vanish.
  const double alpha = sv > 0.0 ? std::min(e, std::sqrt(e / sv)) : e;
  const auto kmax = static_cast<std::int64_t>(std::floor(alpha));
  std::int64_t total = 0;
  if (s2.is_rational()) {
    const auto r = s2.as_rational();
    const long double scaled = std::floor(static_cast<long double>(e) * r.q);
    if (scaled > 9.0e18L) throw OverflowError("E * q exceeds 64 bits");
    const auto m = static_cast<int128>(scaled);
    for (std::int64_t k = 1; k <= kmax; ++k) {
      // #n with (2n+1) k q + k^2 p <= floor(E q)
      const int128 num = m - static_cast<int128>(k) * k * r.p + static_cast<int128>(k) * r.q;
      if (num <= 0) continue;
      total = detail::checked_add(total, static_cast<std::int64_t>(num / (2 * static_cast<int128>(k) * r.q)));
    }
  } else {
    const long double s = std::sqrt(static_cast<long double>(s2.as_irrational().radicand));
    for (std::int64_t k = 1; k <= kmax; ++k) {
      const long double kk = static_cast<long double>(k);
      const long double rest = static_cast<long double>(e) - kk * kk * s;
      if (rest < kk) continue;
      total = detail::checked_add(total, static_cast<std::int64_t>(std::floor((rest / kk + 1.0L) / 2.0L)));
    }
  }
  return detail::checked_mul(total, 2);
}

struct WeylSample {
  double e = 0.0;
  std::int64_t count = 0;
  double residual = 0.0;
};

/// (N(E) - E ln E)/E for s = 0, (N(E) - E ln sqrt(E))/E otherwise.
inline std::vector<WeylSample> weyl_residual(const std::vector<double>& samples, const ExactScalar& s2,
                                             const Execution& exec = {}) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] > 0.0)) throw InvalidArgument("E samples must be positive");
    if (i > 0 && !(samples[i] > samples[i - 1])) throw InvalidArgument("E samples must be increasing");
  }
  return detail::parallel_map<WeylSample>(samples.size(), exec, [&](std::size_t i) {
    const double e = samples[i];
    const std::int64_t n = counting_function(e, s2);
    const double lead = s2.is_zero() ? e * std::log(e) : e * std::log(std::sqrt(e));
    return WeylSample{e, n, (static_cast<double>(n) - lead) / e};
  });
}

}  // namespace grushin
