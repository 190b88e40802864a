#pragma once
// PrimeContext: the (p, n) pair everything is computed against, with the
// symplectic form and the arithmetic guard rails.
//
// Vectors live in M = Z_p^{2n}; the groups are the similitude groups of the
// alternating form J = [[0, I_n], [-I_n, 0]]. The context pins the largest
// p-power exponent the run may need so that all int64 arithmetic is provably
// exact (construction fails loudly otherwise).

#include "hecke/arith.hpp"
#include "hecke/errors.hpp"
#include "hecke/matrix.hpp"

namespace hk {

struct PrimeContext {
  i64 p;
  int n;       // genus; d = 2n
  int d;       // matrix dimension
  int emax;    // largest exponent e such that p^e may appear as a modulus

  Mat J;

  PrimeContext(i64 prime, int genus, int max_exponent = 0)
      : p(prime), n(genus), d(2 * genus) {
    if (!(p >= 2) || genus < 1 || genus > 3)
      throw std::invalid_argument("PrimeContext: need p >= 2 and 1 <= n <= 3");
    // Representatives and lattice stacks are reduced mod p^emax; consumers
    // assert their own per-call precision needs against this bound. Default to
    // the largest exponent whose power stays below 2^60, so modular products
    // through int128 intermediates are always exact.
    int fit = 0;
    {
      i128 v = 1;
      while (v * p < (i128(1) << 60)) { v *= p; ++fit; }
    }
    emax = max_exponent > 0 ? max_exponent : fit;
    if (emax > fit)
      throw std::overflow_error(
          "PrimeContext: requested exponent bound exceeds the exact-arithmetic guard");
    J = Mat(d);
    for (int i = 0; i < n; ++i) {
      J.at(i, n + i) = 1;
      J.at(n + i, i) = -1;
    }
  }

  // p^e, guarded against the context bound.
  i64 pk(int e) const {
    if (e < 0 || e > emax)
      throw std::overflow_error("PrimeContext: requested p^" + std::to_string(e) +
                                " outside validated range (emax=" + std::to_string(emax) + ")");
    return ipow(p, e);
  }
};

}  // namespace hk
