#pragma once
// p-adic linear algebra over Z_p, computed exactly on integer representatives.
//
// Central objects:
//  * similitude_of   — the multiplier mu with M^T J M = mu J, split as p^k * unit
//  * hnf_p           — the unique upper-triangular column-reduced left-GL(Z_p)
//                      canonical form (pivots are p-powers on the diagonal)
//  * smith_exponents — elementary divisor exponents over Z_p
//  * scaled_inverse  — Mhat = mu * M^{-1}, integral, computed without division
//  * unit_inv_mod    — inverse of a p-adic unit modulo p^e
//  * rank_mod_p      — rank of the reduction mod p

#include <vector>

#include "hecke/context.hpp"
#include "hecke/errors.hpp"
#include "hecke/matrix.hpp"

namespace hk {

struct Similitude {
  i64 mu;    // exact multiplier (may be negative; its p-free part is a unit)
  int k;     // v_p(mu)
  i64 unit;  // mu / p^k
};

// Multiplier of a similitude of J; throws NotSimilitude if M^T J M is not a
// nonzero scalar multiple of J. (For n = 1 every matrix with det != 0
// qualifies, with mu = det.)
Similitude similitude_of(const PrimeContext& ctx, const Mat& M);

// Inverse of u modulo m (m a p-power here, but any modulus works); throws
// NotAUnit when gcd(u, m) != 1. Result in [0, m).
i64 unit_inv_mod(i64 u, i64 m);

// Row Hermite normal form over Z_p: H = U*M with U in GL_d(Z_p), H upper
// triangular, H[i][i] = p^{e_i}, entries above each pivot reduced into
// [0, p^{e_i}), zeros below. `det_val_bound` must bound v_p(det M); all
// arithmetic runs modulo p^{bound+2}, which is exact for this shape.
// Throws NonMaximalRank if the rank drops modulo p^{bound+2}.
Mat hnf_p(const PrimeContext& ctx, const Mat& M, int det_val_bound);

// Elementary divisor exponents of M over Z_p, ascending. Same modulus policy
// as hnf_p.
std::vector<int> smith_exponents(const PrimeContext& ctx, const Mat& M, int det_val_bound);

// Smith decomposition with transforms: U*M*V == diag(p^{f_i}) mod p^modexp,
// with U, V invertible mod p^modexp. Used for kernel lattices.
struct SmithTriple {
  Mat U, V;
  std::vector<int> f;
};
SmithTriple smith_with_transforms(const PrimeContext& ctx, const Mat& M, int modexp);

// Mhat = mu(M) * M^{-1} = -J M^T J; integral whenever M is an integral
// similitude. Asserts M * Mhat == mu * E exactly.
Mat scaled_inverse(const PrimeContext& ctx, const Mat& M);

// -J M^T J without the similitude assertion: equals mu(M) * M^{-1} when M is
// a similitude, but is defined (and exact) for every integer matrix, which is
// what the modular paths need.
Mat j_twist(const PrimeContext& ctx, const Mat& M);

// Rank of M mod p.
int rank_mod_p(const PrimeContext& ctx, const Mat& M);

// For an upper-triangular T with p-power pivots (a Hermite label), returns the
// exact integer Z with T * Z == p^scale_exp * E, by back-substitution with
// exact divisions. Requires p^scale_exp divisible by every pivot; throws
// NonIntegral if a division fails (cannot happen for genuine labels).
Mat scaled_inverse_triangular(const PrimeContext& ctx, const Mat& T, int scale_exp);

// (A*B)/divisor reduced mod `modulus`, with the division performed exactly on
// __int128 accumulators (NonIntegral if an entry is not divisible). This is
// how conjugation-style transforms H' * Ghat * H^{-1} are evaluated: the
// inverse arrives as a scaled integer matrix and the scale is divided back
// out before any reduction, so no precision is lost to the modulus.
Mat mul_div_mod(const Mat& A, const Mat& B, i64 divisor, i64 modulus);

// Exact determinant via fraction-free elimination (test/diagnostic use; the
// engine itself never divides by determinants).
i64 det_exact(const Mat& M);

}  // namespace hk
