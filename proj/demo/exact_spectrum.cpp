// Multiplicities of the exact family at s = 0 against s^2 = sqrt2.

#include <cstdio>

#include "grushin/assembler.hpp"

int main() {
  using namespace grushin;
  const auto rational = assemble_exact(ExactScalar::rational(0), 20.0);
  std::printf("s2=0, E<=20\n");
  for (const auto& l : rational.lines)
    std::printf("  %-4s mult %2zu  (2 prod(1+alpha) = %lld)\n", l.exact.c_str(), l.multiplicity(),
                static_cast<long long>(multiplicity_factorization(static_cast<std::int64_t>(l.value))));

  const auto irr = assemble_exact(ExactScalar::sqrt_of(2), 20.0);
  std::printf("s2=sqrt2, E<=20\n");
  for (const auto& l : irr.lines) std::printf("  %-12s %.10f mult %zu\n", l.exact.c_str(), l.value, l.multiplicity());
}
