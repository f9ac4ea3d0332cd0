// Plot-ready CSV of the minimal strip ratio against k for a few strips.
// Usage: demo_concentration_profile [kmax]

#include <cstdio>
#include <cstdlib>

#include "grushin/concentration.hpp"

int main(int argc, char** argv) {
  using namespace grushin;
  const int kmax = argc > 1 ? std::atoi(argv[1]) : 40;
  const Strip strips[] = {{0.0, pi}, {0.0, pi / 3}, {-0.1, 0.1}};
  std::printf("a,b,k,min_ratio,limit\n");
  for (const auto& w : strips)
    for (int k = 1; k <= kmax; ++k)
      std::printf("%.17g,%.17g,%d,%.17g,%.17g\n", w.a, w.b, k, min_ratio(k, w).value, w.width() / (2 * pi));
}
