// The double level E = 6 of -d^2/dx^2 + k^2 (x^2 + 1) (k = 1, n = 2 and
// k = 2, n = 0) under t x^2 W, W a mollified indicator of [-1, 1].
// Prints t, both eigenvalues, their gap and the first-order prediction.

#include <cmath>
#include <cstdio>

#include "grushin/perturb.hpp"

int main() {
  using namespace grushin;
  const Tolerances tol;
  const auto v = Potential::shifted(ExactScalar::rational(1));
  const auto w = mollified_indicator(-1.0, 1.0, 0.2);
  const PerturbedFamily f1(v, w, 1, 3, tol);
  const PerturbedFamily f2(v, w, 2, 1, tol);
  const double d = std::abs(f1.slope(f1.base(), 2).first - f2.slope(f2.base(), 0).first);
  std::printf("t,lambda_k1,lambda_k2,gap,first_order\n");
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.01 * i;
    const double a = f1.solve(t, 3).pairs[2].lambda;
    const double b = f2.solve(t, 1).pairs[0].lambda;
    std::printf("%.2f,%.12f,%.12f,%.3e,%.3e\n", t, a, b, std::abs(a - b), t * d);
  }
}
