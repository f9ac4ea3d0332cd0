#pragma once

// Domain types shared by every module: errors, exact scalars, potentials,
// compactly supported perturbations, tolerances, and the potential parser.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "detail/format.hpp"
#include "detail/quadrature.hpp"

namespace grushin {

inline constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : Error("parse", message + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class InvariantError : public Error {
 public:
  InvariantError(const std::string& message, double x)
      : Error("invariant", message + " (at x=" + detail::format_double(x) + ")"), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("invalid-argument", message) {}
};

class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& message) : Error("overflow", message) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& message) : Error("precondition", message) {}
};

/// Numerical failure. Carries the best estimates available when it gave up.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, std::vector<double> best = {})
      : Error("solver", message), best_(std::move(best)) {}
  const std::vector<double>& best_estimates() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

// ---------------------------------------------------------------------------
// Checked 64-bit arithmetic

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r{};
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("64-bit overflow in addition");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r{};
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("64-bit overflow in multiplication");
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r{};
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("64-bit overflow in subtraction");
  return r;
}

inline std::int64_t checked_abs(std::int64_t a) {
  if (a == std::numeric_limits<std::int64_t>::min()) throw OverflowError("64-bit overflow in abs");
  return a < 0 ? -a : a;
}

inline bool is_perfect_square(std::int64_t n) {
  if (n < 0) return false;
  auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ExactScalar: a rational p/q or a tagged square root sqrt(N).

class ExactScalar {
 public:
  struct Rational {
    std::int64_t p = 0;
    std::int64_t q = 1;
    friend bool operator==(const Rational&, const Rational&) = default;
  };
  /// sqrt(radicand) with radicand not a perfect square.
  struct Irrational {
    std::int64_t radicand = 2;
    double approx = std::numbers::sqrt2;
    std::string label() const { return "sqrt" + std::to_string(radicand); }
    friend bool operator==(const Irrational& a, const Irrational& b) {
      return a.radicand == b.radicand;
    }
  };

  ExactScalar() = default;

  static ExactScalar rational(std::int64_t p, std::int64_t q = 1) {
    if (q == 0) throw InvalidArgument("rational with zero denominator");
    if (q < 0) {
      p = detail::checked_mul(p, -1);
      q = detail::checked_mul(q, -1);
    }
    const std::int64_t g = std::gcd(p, q);
    ExactScalar s;
    s.v_ = Rational{p / g, q / g};
    return s;
  }

  static ExactScalar sqrt_of(std::int64_t radicand) {
    if (radicand <= 0 || detail::is_perfect_square(radicand))
      throw InvalidArgument("sqrt" + std::to_string(radicand) +
                            " is not an irrational square root");
    ExactScalar s;
    s.v_ = Irrational{radicand, std::sqrt(static_cast<double>(radicand))};
    return s;
  }

  bool is_rational() const { return std::holds_alternative<Rational>(v_); }
  const Rational& as_rational() const { return std::get<Rational>(v_); }
  const Irrational& as_irrational() const { return std::get<Irrational>(v_); }

  bool is_zero() const { return is_rational() && as_rational().p == 0; }
  bool is_negative() const { return is_rational() && as_rational().p < 0; }

  double value() const {
    if (is_rational()) {
      const auto& r = as_rational();
      return static_cast<double>(r.p) / static_cast<double>(r.q);
    }
    return as_irrational().approx;
  }

  std::string render() const {
    if (is_rational()) {
      const auto& r = as_rational();
      return r.q == 1 ? std::to_string(r.p) : std::to_string(r.p) + "/" + std::to_string(r.q);
    }
    return as_irrational().label();
  }

  friend bool operator==(const ExactScalar&, const ExactScalar&) = default;

 private:
  std::variant<Rational, Irrational> v_{Rational{}};
};

/// Accepts "p", "p/q", "sqrtN" and "irr:sqrtN".
inline ExactScalar parse_exact_scalar(std::string_view text, std::size_t offset = 0) {
  std::string_view body = text;
  std::size_t pos = offset;
  if (body.starts_with("irr:")) {
    body.remove_prefix(4);
    pos += 4;
    if (!body.starts_with("sqrt"))
      throw ParseError(pos, "irrational tag must be sqrtN, got '" + std::string(body) + "'");
  }
  if (body.starts_with("sqrt")) {
    long long n{};
    if (!detail::parse_int(body.substr(4), n) || n <= 0)
      throw ParseError(pos + 4, "expected positive integer radicand after 'sqrt'");
    if (detail::is_perfect_square(n))
      throw ParseError(pos + 4, "sqrt" + std::to_string(n) + " is rational; write it as an integer");
    return ExactScalar::sqrt_of(n);
  }
  const auto slash = body.find('/');
  long long p{};
  long long q = 1;
  if (!detail::parse_int(body.substr(0, slash), p))
    throw ParseError(pos, "expected integer numerator in '" + std::string(body) + "'");
  if (slash != std::string_view::npos) {
    if (!detail::parse_int(body.substr(slash + 1), q) || q <= 0)
      throw ParseError(pos + slash + 1, "expected positive integer denominator");
  }
  return ExactScalar::rational(p, q);
}

// ---------------------------------------------------------------------------
// Mollified indicators

namespace detail {

inline double bump_raw(double t) {
  return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
}

inline double bump_integral(double lo, double hi) {
  lo = std::max(lo, -1.0);
  hi = std::min(hi, 1.0);
  if (hi <= lo) return 0.0;
  const auto panels = static_cast<std::size_t>(std::ceil((hi - lo) / 0.125));
  return gauss_legendre_20().integrate(bump_raw, lo, hi, std::max<std::size_t>(panels, 1));
}

inline double bump_mass() {
  static const double mass = bump_integral(-1.0, 1.0);
  return mass;
}

/// Cumulative distribution of the standard mollifier on [-1, 1].
inline double bump_cdf(double z) {
  if (z <= -1.0) return 0.0;
  if (z >= 1.0) return 1.0;
  if (z <= 0.0) return bump_integral(-1.0, z) / bump_mass();
  return 1.0 - bump_integral(z, 1.0) / bump_mass();
}

/// Maximizes f on [lo, hi]: dense sampling, then golden-section refinement
/// around the best few samples.
template <class F>
double maximize(F&& f, double lo, double hi, std::size_t samples = 4096) {
  if (!(hi > lo)) return f(lo);
  const double step = (hi - lo) / static_cast<double>(samples);
  std::vector<std::pair<double, std::size_t>> vals;
  vals.reserve(samples + 1);
  for (std::size_t i = 0; i <= samples; ++i)
    vals.emplace_back(f(lo + step * static_cast<double>(i)), i);
  double best = vals.front().first;
  for (const auto& v : vals) best = std::max(best, v.first);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double left = i > 0 ? vals[i - 1].first : -std::numeric_limits<double>::infinity();
    const double right = i < samples ? vals[i + 1].first : -std::numeric_limits<double>::infinity();
    if (vals[i].first >= left && vals[i].first >= right && vals[i].first >= 0.5 * best)
      candidates.push_back(i);
  }
  constexpr double invphi = 0.6180339887498949;
  for (std::size_t idx : candidates) {
    double a = lo + step * (static_cast<double>(idx) - 1.0);
    double b = lo + step * (static_cast<double>(idx) + 1.0);
    a = std::max(a, lo);
    b = std::min(b, hi);
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 80 && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++it) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = f(d);
      }
      best = std::max({best, fc, fd});
    }
  }
  return best;
}

}  // namespace detail

enum class Geometry { cylinder, torus };

inline std::string to_string(Geometry g) { return g == Geometry::cylinder ? "cylinder" : "torus"; }

/// amplitude * (phi_eps * 1_[lo,hi]) with phi the standard mollifier.
struct Bump {
  double amplitude = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double eps = 0.1;

  double operator()(double x) const {
    return amplitude * (detail::bump_cdf((x - lo) / eps) - detail::bump_cdf((x - hi) / eps));
  }
  double support_lo() const { return lo - eps; }
  double support_hi() const { return hi + eps; }

  void validate() const {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
      throw InvalidArgument("bump interval must satisfy lo < hi");
    if (!(eps > 0.0) || eps > 0.5 * (hi - lo))
      throw InvalidArgument("bump eps must satisfy 0 < eps <= (hi-lo)/2");
    if (!std::isfinite(amplitude)) throw InvalidArgument("bump amplitude must be finite");
  }

  std::string render() const {
    using detail::format_double;
    return format_double(amplitude) + "@" + format_double(lo) + ":" + format_double(hi) + ":" +
           format_double(eps);
  }

  friend bool operator==(const Bump&, const Bump&) = default;
};

/// |x|^{2 gamma} on the cylinder, (4 sin^2(x/2))^gamma on the torus.
inline double base_weight(Geometry g, double gamma, double x) {
  if (g == Geometry::cylinder) return std::pow(std::abs(x), 2.0 * gamma);
  const double s = std::sin(0.5 * x);
  return std::pow(4.0 * s * s, gamma);
}

/// Maps x onto [-pi, pi).
inline double wrap_angle(double x) {
  if (x >= -pi && x < pi) return x;
  const double two_pi = 2.0 * pi;
  double y = x - two_pi * std::floor((x + pi) / two_pi);
  if (y >= pi) y -= two_pi;
  return y;
}

// ---------------------------------------------------------------------------
// Perturbation: smooth, non-negative, compactly supported w.

class Perturbation {
 public:
  Perturbation() = default;

  explicit Perturbation(std::vector<Bump> bumps) : bumps_(std::move(bumps)) {
    for (const auto& b : bumps_) {
      b.validate();
      if (b.amplitude < 0.0)
        throw InvariantError("perturbation must be non-negative", 0.5 * (b.lo + b.hi));
    }
  }

  double operator()(double x) const {
    double s = 0.0;
    for (const auto& b : bumps_) s += b(x);
    return s;
  }

  const std::vector<Bump>& bumps() const { return bumps_; }
  bool is_zero() const {
    return std::all_of(bumps_.begin(), bumps_.end(), [](const Bump& b) { return b.amplitude == 0.0; });
  }

  /// Closed hull of the supports; {0, 0} for the zero perturbation.
  std::pair<double, double> support() const {
    if (bumps_.empty()) return {0.0, 0.0};
    double lo = bumps_.front().support_lo();
    double hi = bumps_.front().support_hi();
    for (const auto& b : bumps_) {
      lo = std::min(lo, b.support_lo());
      hi = std::max(hi, b.support_hi());
    }
    return {lo, hi};
  }

  Perturbation scaled(double t) const {
    if (t < 0.0) throw InvalidArgument("perturbation scale must be non-negative");
    auto out = bumps_;
    for (auto& b : out) b.amplitude *= t;
    return Perturbation(std::move(out));
  }

  /// sup |w|.
  double sup() const {
    if (is_zero()) return 0.0;
    const auto [lo, hi] = support();
    return detail::maximize(*this, lo, hi);
  }

  /// sup of base_weight * w, relative accuracy ~1e-10.
  double weighted_sup(Geometry g, double gamma) const {
    if (is_zero()) return 0.0;
    auto [lo, hi] = support();
    if (g == Geometry::torus) {
      lo = std::max(lo, -pi);
      hi = std::min(hi, pi);
    }
    return detail::maximize([&](double x) { return base_weight(g, gamma, x) * (*this)(x); }, lo, hi);
  }

  std::string render() const {
    if (bumps_.empty()) return "0";
    std::string out;
    for (const auto& b : bumps_) {
      if (!out.empty()) out += "+";
      out += b.render();
    }
    return out;
  }

  friend bool operator==(const Perturbation&, const Perturbation&) = default;

 private:
  std::vector<Bump> bumps_;
};

/// phi_eps * 1_[a,b]; equals 1 on [a+eps, b-eps] and vanishes outside [a-eps, b+eps].
inline Perturbation mollified_indicator(double a, double b, double eps) {
  Bump bump{1.0, a, b, eps};
  bump.validate();
  return Perturbation({bump});
}

// ---------------------------------------------------------------------------
// Potential

/// V = base * W~, W~ = 1 + sum of bumps (W~ >= 1 is validated by sampling).
struct StructuredProfile {
  std::vector<Bump> bumps;
  double sup_bound = 1.0;  // sup W~
  friend bool operator==(const StructuredProfile& a, const StructuredProfile& b) {
    return a.bumps == b.bumps;
  }
};

/// V = x^2 + s^2.
struct ExactFamilyProfile {
  ExactScalar s2;
  friend bool operator==(const ExactFamilyProfile&, const ExactFamilyProfile&) = default;
};

/// Piecewise-linear through the nodes, V(x_end) (|x|/|x_end|)^ext beyond.
struct SampledProfile {
  std::vector<double> xs;
  std::vector<double> vs;
  double extrapolation_exponent = 2.0;
  std::string source;
  // Estimate of sup V/|x|^{2 gamma} on the node range only.
  double w_tilde_sup_estimate = 0.0;
  friend bool operator==(const SampledProfile& a, const SampledProfile& b) {
    return a.xs == b.xs && a.vs == b.vs && a.extrapolation_exponent == b.extrapolation_exponent &&
           a.source == b.source;
  }
};

using Profile = std::variant<StructuredProfile, ExactFamilyProfile, SampledProfile>;

class Potential {
 public:
  static Potential power(double gamma, Geometry g = Geometry::cylinder) {
    return structured(g, gamma, {});
  }

  static Potential structured(Geometry g, double gamma, std::vector<Bump> bumps) {
    check_gamma(gamma);
    for (const auto& b : bumps) b.validate();
    Potential p;
    p.geometry_ = g;
    p.gamma_ = gamma;
    StructuredProfile prof{std::move(bumps), 1.0};
    // W~ differs from 1 only on the bump supports.
    auto w_tilde = [&prof](double x) {
      double s = 1.0;
      for (const auto& b : prof.bumps) s += b(x);
      return s;
    };
    for (const auto& b : prof.bumps) {
      const double lo = b.support_lo();
      const double hi = b.support_hi();
      constexpr int samples = 2000;
      for (int i = 0; i <= samples; ++i) {
        const double x = lo + (hi - lo) * i / samples;
        if (w_tilde(x) < 1.0 - 1e-12) throw InvariantError("W~ must be >= 1", x);
      }
      prof.sup_bound = std::max(prof.sup_bound, detail::maximize(w_tilde, lo, hi, 1024));
    }
    p.profile_ = std::move(prof);
    return p;
  }

  static Potential shifted(ExactScalar s2) {
    if (s2.is_negative()) throw InvalidArgument("s^2 must be non-negative");
    Potential p;
    p.geometry_ = Geometry::cylinder;
    p.gamma_ = 1.0;
    p.profile_ = ExactFamilyProfile{std::move(s2)};
    return p;
  }

  static Potential sampled(std::vector<double> xs, std::vector<double> vs, double ext,
                           std::string source = {}, double gamma = 1.0) {
    check_gamma(gamma);
    if (xs.size() < 2 || xs.size() != vs.size())
      throw InvalidArgument("sampled potential needs at least two (x, v) nodes");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(vs[i]))
        throw InvariantError("sampled nodes must be finite", xs[i]);
      if (vs[i] < 0.0) throw InvariantError("sampled potential must be non-negative", xs[i]);
      if (i > 0 && !(xs[i] > xs[i - 1]))
        throw InvariantError("sampled x must be strictly increasing", xs[i]);
    }
    if (!(ext > 0.0)) throw InvalidArgument("extrapolation exponent must be > 0");
    if (xs.front() == 0.0 || xs.back() == 0.0)
      throw InvariantError("sampled node range must not end at 0", 0.0);
    Potential p;
    p.geometry_ = Geometry::cylinder;
    p.gamma_ = gamma;
    SampledProfile prof{std::move(xs), std::move(vs), ext, std::move(source), 0.0};
    for (std::size_t i = 0; i < prof.xs.size(); ++i) {
      if (prof.xs[i] == 0.0) continue;
      prof.w_tilde_sup_estimate = std::max(
          prof.w_tilde_sup_estimate, prof.vs[i] / std::pow(std::abs(prof.xs[i]), 2.0 * gamma));
    }
    p.profile_ = std::move(prof);
    return p;
  }

  Geometry geometry() const { return geometry_; }
  double gamma() const { return gamma_; }
  const Profile& profile() const { return profile_; }

  bool is_exact_family() const { return std::holds_alternative<ExactFamilyProfile>(profile_); }
  bool is_structured() const { return std::holds_alternative<StructuredProfile>(profile_); }
  bool is_sampled() const { return std::holds_alternative<SampledProfile>(profile_); }
  const ExactScalar& s2() const { return std::get<ExactFamilyProfile>(profile_).s2; }

  /// Multiplier of a perturbation direction: |x|^{2 gamma} or the torus base.
  double weight(double x) const {
    if (geometry_ == Geometry::torus) x = wrap_angle(x);
    return base_weight(geometry_, gamma_, x);
  }

  double operator()(double x) const {
    if (geometry_ == Geometry::torus) x = wrap_angle(x);
    return std::visit([&](const auto& prof) { return eval(prof, x); }, profile_);
  }

  std::string render() const {
    using detail::format_double;
    return std::visit(
        [&](const auto& prof) -> std::string {
          using T = std::decay_t<decltype(prof)>;
          if constexpr (std::is_same_v<T, StructuredProfile>) {
            std::string out = geometry_ == Geometry::torus ? "torus:" : "power:";
            out += "gamma=" + format_double(gamma_);
            for (const auto& b : prof.bumps) out += ",bump=" + b.render();
            return out;
          } else if constexpr (std::is_same_v<T, ExactFamilyProfile>) {
            return "shifted:s2=" + prof.s2.render();
          } else {
            std::string out = "table:" + prof.source + ",ext=" + format_double(prof.extrapolation_exponent);
            if (gamma_ != 1.0) out += ",gamma=" + format_double(gamma_);
            return out;
          }
        },
        profile_);
  }

  friend bool operator==(const Potential&, const Potential&) = default;

 private:
  static void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
  }

  double eval(const StructuredProfile& prof, double x) const {
    double w = 1.0;
    for (const auto& b : prof.bumps) w += b(x);
    return base_weight(geometry_, gamma_, x) * w;
  }

  static double eval(const ExactFamilyProfile& prof, double x) { return x * x + prof.s2.value(); }

  static double eval(const SampledProfile& prof, double x) {
    const auto& xs = prof.xs;
    const auto& vs = prof.vs;
    if (x <= xs.front())
      return vs.front() * std::pow(std::abs(x) / std::abs(xs.front()), prof.extrapolation_exponent);
    if (x >= xs.back())
      return vs.back() * std::pow(std::abs(x) / std::abs(xs.back()), prof.extrapolation_exponent);
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return (1.0 - t) * vs[i - 1] + t * vs[i];
  }

  Geometry geometry_ = Geometry::cylinder;
  double gamma_ = 1.0;
  Profile profile_ = StructuredProfile{};
};

inline double eval_potential(const Potential& v, double x) { return v(x); }

// ---------------------------------------------------------------------------
// Tolerances

struct Tolerances {
  double eig_rel = 1e-7;      // target relative eigenvalue accuracy
  double cluster_abs = 1e-4;  // multiplicity clustering width
  double quad_rel = 1e-10;    // quadrature accuracy

  void validate() const {
    if (!(eig_rel > 0.0) || !(cluster_abs > 0.0) || !(quad_rel > 0.0))
      throw InvalidArgument("tolerances must be strictly positive");
  }
};

// ---------------------------------------------------------------------------
// Parsing

/// CSV with header `x,v`, strictly increasing finite x.
inline std::pair<std::vector<double>, std::vector<double>> read_potential_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open potential table '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  };
  std::vector<double> xs;
  std::vector<double> vs;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto comma = body.find(',');
    if (comma == std::string_view::npos)
      throw ParseError(lineno, path + ": expected two comma-separated columns");
    const auto a = trim(body.substr(0, comma));
    const auto b = trim(body.substr(comma + 1));
    if (!header) {
      if (a != "x" || b != "v") throw ParseError(lineno, path + ": header must be `x,v`");
      header = true;
      continue;
    }
    double x{};
    double v{};
    if (!detail::parse_double(a, x) || !detail::parse_double(b, v))
      throw ParseError(lineno, path + ": malformed number");
    xs.push_back(x);
    vs.push_back(v);
  }
  if (!header) throw ParseError(0, path + ": empty table");
  return {std::move(xs), std::move(vs)};
}

namespace detail {

struct SpecCursor {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }

  std::string_view take_until(std::string_view delims) {
    const std::size_t start = pos;
    while (pos < text.size() && delims.find(text[pos]) == std::string_view::npos) ++pos;
    return text.substr(start, pos - start);
  }

  void expect(char c) {
    if (pos >= text.size() || text[pos] != c)
      throw ParseError(pos, std::string("expected '") + c + "'");
    ++pos;
  }

  double number(std::string_view delims) {
    const std::size_t start = pos;
    const auto tok = take_until(delims);
    double v{};
    if (!parse_double(tok, v) || !std::isfinite(v))
      throw ParseError(start, "expected a number, got '" + std::string(tok) + "'");
    return v;
  }
};

inline Bump parse_bump(SpecCursor& cur) {
  const std::size_t start = cur.pos;
  Bump b;
  b.amplitude = cur.number("@");
  cur.expect('@');
  b.lo = cur.number(":");
  cur.expect(':');
  b.hi = cur.number(":");
  cur.expect(':');
  b.eps = cur.number(",+");
  try {
    b.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(start, e.what());
  }
  return b;
}

}  // namespace detail

/// Parses `amp@lo:hi:eps[+amp@lo:hi:eps...]`, or `0` for the zero perturbation.
inline Perturbation parse_perturbation(std::string_view spec) {
  if (spec == "0") return Perturbation{};
  detail::SpecCursor cur{spec};
  std::vector<Bump> bumps;
  for (;;) {
    bumps.push_back(detail::parse_bump(cur));
    if (cur.done()) break;
    cur.expect('+');
  }
  for (const auto& b : bumps)
    if (b.amplitude < 0.0) throw ParseError(0, "perturbation amplitudes must be non-negative");
  return Perturbation(std::move(bumps));
}

/// Potential mini-grammar:
///   power:gamma=G[,bump=A@lo:hi:eps]...   |x|^{2G} (1 + sum of bumps)
///   torus:gamma=G[,bump=A@lo:hi:eps]...   (4 sin^2(x/2))^G (1 + sum of bumps)
///   shifted:s2=S                          x^2 + S,  S = p | p/q | sqrtN
///   table:PATH[,ext=E][,gamma=G]          sampled CSV with header x,v
inline Potential parse_potential(std::string_view spec) {
  detail::SpecCursor cur{spec};
  const auto kind = cur.take_until(":");
  if (cur.done()) throw ParseError(cur.pos, "expected '<kind>:' prefix");
  cur.expect(':');

  auto key = [&]() {
    const std::size_t start = cur.pos;
    const auto k = cur.take_until("=");
    if (cur.done()) throw ParseError(start, "expected key=value");
    cur.expect('=');
    return std::pair{k, start};
  };

  if (kind == "power" || kind == "torus") {
    const auto geometry = kind == "power" ? Geometry::cylinder : Geometry::torus;
    double gamma = 0.0;
    bool have_gamma = false;
    std::vector<Bump> bumps;
    while (!cur.done()) {
      const auto [k, kpos] = key();
      if (k == "gamma") {
        const std::size_t vpos = cur.pos;
        gamma = cur.number(",");
        if (!(gamma > 0.0)) throw ParseError(vpos, "gamma must be positive");
        have_gamma = true;
      } else if (k == "bump") {
        bumps.push_back(detail::parse_bump(cur));
      } else {
        throw ParseError(kpos, "unknown key '" + std::string(k) + "'");
      }
      if (!cur.done()) cur.expect(',');
    }
    if (!have_gamma) throw ParseError(cur.pos, "missing gamma=");
    return Potential::structured(geometry, gamma, std::move(bumps));
  }
  if (kind == "shifted") {
    const auto [k, kpos] = key();
    if (k != "s2") throw ParseError(kpos, "expected s2=");
    const std::size_t vpos = cur.pos;
    const auto tok = cur.take_until(",");
    if (!cur.done()) throw ParseError(cur.pos, "unexpected trailing input");
    auto s2 = parse_exact_scalar(tok, vpos);
    if (s2.is_negative()) throw ParseError(vpos, "s2 must be non-negative");
    return Potential::shifted(std::move(s2));
  }
  if (kind == "table") {
    const auto path = cur.take_until(",");
    if (path.empty()) throw ParseError(cur.pos, "expected a file path");
    double ext = 2.0;
    double gamma = 1.0;
    while (!cur.done()) {
      cur.expect(',');
      const auto [k, kpos] = key();
      const std::size_t vpos = cur.pos;
      if (k == "ext") {
        ext = cur.number(",");
        if (!(ext > 0.0)) throw ParseError(vpos, "ext must be positive");
      } else if (k == "gamma") {
        gamma = cur.number(",");
        if (!(gamma > 0.0)) throw ParseError(vpos, "gamma must be positive");
      } else {
        throw ParseError(kpos, "unknown key '" + std::string(k) + "'");
      }
    }
    auto [xs, vs] = read_potential_table(std::string(path));
    return Potential::sampled(std::move(xs), std::move(vs), ext, std::string(path), gamma);
  }
  throw ParseError(0, "unknown potential kind '" + std::string(kind) + "'");
}

}  // namespace grushin
