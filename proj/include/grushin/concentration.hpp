#pragma once

// Concentration of eigenfunctions phi(x, y) = u(x) (alpha e^{iky} + beta e^{-iky})
// on horizontal strips R x (a, b). The x-factor cancels in the ratio.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "assembler.hpp"
#include "core.hpp"
#include "detail/parallel.hpp"
#include "detail/quadrature.hpp"
#include "schrod1d.hpp"

namespace grushin {

struct Strip {
  double a = 0.0;
  double b = pi;

  void validate() const {
    if (!(a >= -pi - 1e-12 && b <= pi + 1e-12 && a < b))
      throw InvalidArgument("strip needs -pi <= a < b <= pi, got (" + detail::format_double(a) + ", " +
                            detail::format_double(b) + ")");
  }
  double width() const { return b - a; }
};

struct ModeCoefficients {
  double alpha0 = 1.0;
  double alpha1 = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;

  std::complex<double> alpha() const { return {alpha0, alpha1}; }
  std::complex<double> beta() const { return {beta0, beta1}; }
  double norm2() const { return alpha0 * alpha0 + alpha1 * alpha1 + beta0 * beta0 + beta1 * beta1; }
  void validate() const {
    if (!(norm2() > 0.0)) throw InvalidArgument("mode coefficients are all zero");
  }
};

struct Kappas {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
};

inline Kappas kappa_coefficients(const ModeCoefficients& c) {
  const double s0 = c.alpha0 + c.beta0;
  const double s1 = c.alpha1 + c.beta1;
  const double d0 = c.alpha0 - c.beta0;
  const double d1 = c.alpha1 - c.beta1;
  return {s0 * s0 + s1 * s1, d0 * d0 + d1 * d1, 2.0 * (c.alpha0 * c.beta1 - c.alpha1 * c.beta0)};
}

/// ||phi||^2 on the strip over ||phi||^2 on the cylinder:
/// (k1-k2)/(k1+k2) f/(4 pi k) + (b-a)/(2 pi) + k3/(k1+k2) g/(pi k),
/// f = sin 2bk - sin 2ak, g = cos^2 ak - cos^2 bk.
inline double ratio_closed_form(const ModeCoefficients& c, int k, const Strip& w) {
  c.validate();
  w.validate();
  if (k == 0) throw InvalidArgument("k must be nonzero");
  const auto [k1, k2, k3] = kappa_coefficients(c);
  const double kk = k;
  const double f = std::sin(2.0 * w.b * kk) - std::sin(2.0 * w.a * kk);
  const double ca = std::cos(w.a * kk);
  const double cb = std::cos(w.b * kk);
  const double g = ca * ca - cb * cb;
  const double sum = k1 + k2;
  return (k1 - k2) / sum * f / (4.0 * pi * kk) + w.width() / (2.0 * pi) + k3 / sum * g / (pi * kk);
}

struct MinRatio {
  double value = 0.0;
  ModeCoefficients minimizer;
};

/// Minimum over (alpha, beta) of the ratio: the smallest eigenvalue of the
/// Gram matrix of {e^{iky}, e^{-iky}} on (a, b), over 2 pi. Equals
/// ((b-a) - |sin k(b-a)|/|k|)/(2 pi).
inline MinRatio min_ratio(int k, const Strip& w) {
  w.validate();
  if (k == 0) throw InvalidArgument("k must be nonzero");
  const double kk = k;
  // g = int_a^b e^{2iky} dy
  const std::complex<double> g{(std::sin(2.0 * kk * w.b) - std::sin(2.0 * kk * w.a)) / (2.0 * kk),
                               (std::cos(2.0 * kk * w.a) - std::cos(2.0 * kk * w.b)) / (2.0 * kk)};
  const double mod = std::abs(std::sin(kk * w.width())) / std::abs(kk);
  MinRatio out;
  out.value = (w.width() - mod) / (2.0 * pi);
  const double r = 1.0 / std::sqrt(2.0);
  if (std::abs(g) == 0.0) {
    out.minimizer = {1.0, 0.0, 0.0, 0.0};
  } else {
    const std::complex<double> beta = -r * g / std::abs(g);
    out.minimizer = {r, 0.0, beta.real(), beta.imag()};
  }
  return out;
}

struct QuadratureRatio {
  double ratio = 0.0;
  double richardson_diff = 0.0;
  bool converged = true;
};

/// Ratio by direct quadrature of |u(x)|^2 |alpha e^{iky} + beta e^{-iky}|^2:
/// grid sums in x, composite Gauss-Legendre with `panels` panels in y, checked
/// against 2 * panels.
inline QuadratureRatio ratio_quadrature(const EigenPair& phi, const ModeCoefficients& c, const Strip& w,
                                        std::size_t panels, const Tolerances& tol = {}) {
  c.validate();
  w.validate();
  if (panels == 0) throw InvalidArgument("need at least one y panel");
  const auto& rule = detail::gauss_legendre_20();
  const double kk = phi.k;
  const auto alpha = c.alpha();
  const auto beta = c.beta();
  auto y_density = [&](double y) {
    const std::complex<double> e{std::cos(kk * y), std::sin(kk * y)};
    return std::norm(alpha * e + beta * std::conj(e));
  };
  double x_mass = 0.0;
  for (double u : phi.u) x_mass += u * u;
  x_mass *= phi.grid.spacing();
  auto ratio_with = [&](std::size_t p) {
    const double strip = x_mass * rule.integrate(y_density, w.a, w.b, p);
    const double total = x_mass * rule.integrate(y_density, -pi, pi, 2 * p);
    return strip / total;
  };
  QuadratureRatio out;
  const double coarse = ratio_with(panels);
  out.ratio = ratio_with(2 * panels);
  out.richardson_diff = std::abs(out.ratio - coarse);
  out.converged = out.richardson_diff <= tol.quad_rel * std::max(1.0, std::abs(out.ratio));
  return out;
}

struct Certificate {
  Strip strip;
  double e_max = 0.0;
  double c_min = 0.0;
  std::int64_t witness_k = 0;
  double witness_value = 0.0;
  double limit_value = 0.0;
  std::size_t lines = 0;
};

/// Finite-range concentration constant: min over lines <= e_max of
/// min_ratio(k, w). Every line must be a single +-k pair.
inline Certificate concentration_certificate(const AssembledSpectrum& spec, const Strip& w,
                                             const Execution& exec = {}) {
  w.validate();
  for (const auto& line : spec.lines) {
    if (line.multiplicity() != 2) {
      const std::string at = line.exact.empty() ? detail::format_double(line.value) : line.exact;
      throw PreconditionError("line " + at + " has multiplicity " + std::to_string(line.multiplicity()) +
                              "; the concentration bound needs multiplicity 2");
    }
  }
  const auto mins = detail::parallel_map<double>(spec.lines.size(), exec, [&](std::size_t i) {
    return min_ratio(static_cast<int>(std::llabs(spec.lines[i].contributors.front().k)), w).value;
  });
  Certificate cert;
  cert.strip = w;
  cert.e_max = spec.e_max;
  cert.limit_value = w.width() / (2.0 * pi);
  cert.lines = spec.lines.size();
  cert.c_min = cert.limit_value;
  for (std::size_t i = 0; i < mins.size(); ++i) {
    if (i == 0 || mins[i] < cert.c_min) {
      cert.c_min = mins[i];
      cert.witness_k = std::llabs(spec.lines[i].contributors.front().k);
      cert.witness_value = spec.lines[i].value;
    }
  }
  return cert;
}

}  // namespace grushin
