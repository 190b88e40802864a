#pragma once
// Generating set for Gamma = GSp_{2n}(Z_p) (unit-multiplier integral
// similitudes), as exact integer matrices.
//
// The set consists of symplectic transvection families, GL_n(Z) block
// embeddings, the form matrix J, and similitude dilations diag(I, u*I) whose
// multipliers generate the units modulo every p-power (u in {-1, 5} for
// p = 2; a primitive root mod p^2 for odd p). Integral symplectic matrices
// surject onto Sp mod p^m, so the image of this set generates the full
// finite group GSp_{2n}(Z/p^m) for every m; the oracle layer validates the
// resulting closure orders against the group-order chain.

#include <vector>

#include "hecke/context.hpp"
#include "hecke/matrix.hpp"

namespace hk {

// Bump when the family changes; part of every cache key.
inline constexpr int kGeneratorSetVersion = 1;

struct GammaGenSet {
  std::vector<Mat> mats;
  int version = kGeneratorSetVersion;
};

GammaGenSet gamma_generators(const PrimeContext& ctx);

}  // namespace hk
