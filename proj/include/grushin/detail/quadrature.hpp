#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace grushin::detail {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          const auto jj = static_cast<double>(j);
          p0 = ((2.0 * jj + 1.0) * z * p1 - jj * p2) / (jj + 1.0);
        }
        dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      nodes[i] = -z;
      nodes[n - 1 - i] = z;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }

  /// Integrates f over [a, b] split into `panels` equal panels.
  template <class F>
  double integrate(F&& f, double a, double b, std::size_t panels = 1) const {
    const double width = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
      const double lo = a + width * static_cast<double>(p);
      const double mid = lo + 0.5 * width;
      double s = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i)
        s += weights[i] * f(mid + 0.5 * width * nodes[i]);
      total += 0.5 * width * s;
    }
    return total;
  }
};

inline const GaussLegendre& gauss_legendre_20() {
  static const GaussLegendre rule(20);
  return rule;
}

}  // namespace grushin::detail
