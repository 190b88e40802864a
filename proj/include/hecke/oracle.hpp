#pragma once
// Brute-force cross-checks for the structured engine.
//
// Everything here recomputes a quantity by exhaustive enumeration over
// finite quotients — full group tables over Z/p^m, explicit representative
// lists, direct coset counting — and compares it with the structured
// computation. The two routes share no intermediate results, so agreement is
// evidence rather than tautology. All comparisons are exact.

#include <cstdint>
#include <utility>
#include <vector>

#include "hecke/context.hpp"
#include "hecke/cosets.hpp"
#include "hecke/element.hpp"
#include "hecke/gens.hpp"
#include "hecke/matrix.hpp"
#include "hecke/report.hpp"

namespace hk {

// ---------------------------------------------------------------------------
// Exhaustive group tables over Z/p^m

// The unit-multiplier similitude group reduced mod p^m, stored as the sorted
// list of packed matrices (entries mixed-radix base p^m, row-major). Closure
// under multiplication makes single-pass orbit computations valid. Feasible
// up to a few million elements (p = 2, m = 2, d = 4 has 1,474,560).
struct FiniteGroupTable {
  i64 p = 0;
  int m = 0;
  int d = 0;
  i64 pm = 0;
  std::vector<std::uint64_t> elems;

  std::uint64_t pack(const Mat& g) const;
  Mat unpack(std::uint64_t key) const;
  bool contains(const Mat& g) const;
  i64 size() const { return i64(elems.size()); }
};

// Breadth-first closure of the generator images mod p^m, seeded at the
// identity. Throws BudgetExceeded past `budget` elements and
// std::invalid_argument when a d x d matrix mod p^m does not fit a 64-bit
// key.
FiniteGroupTable group_table_mod(const PrimeContext& ctx, int m, const GammaGenSet& gens,
                                 i64 budget);

// Elements whose entries at `positions` ((row, col), 0-indexed) vanish mod p.
// The result must again be closed under multiplication — verified
// exhaustively when small, by deterministic sampling otherwise; HeckeError
// if a product escapes.
FiniteGroupTable filter_pattern(const FiniteGroupTable& table,
                                const std::vector<std::pair<int, int>>& positions);

// The stabilizer of the column lattice X·Z^d: elements g with X^{-1} g X
// integral (for a similitude X this coincides with the conjugation subgroup
// Gamma ∩ X·Gamma·X^{-1}). X must be diagonal with p-power entries
// p^{f_i} and max(f_i - f_j) <= m. Closure verified as in filter_pattern.
FiniteGroupTable filter_stabilizer(const FiniteGroupTable& table, const Mat& X);

// Orbit of v under the plain left action g·v mod p^m of every table element;
// sorted. A single pass suffices because the table is closed.
std::vector<Vec> table_vector_orbit(const FiniteGroupTable& table, const Vec& v);

// Orbit of (a mod A·M) under the multiplier-twisted action
// g * a = mu(g)^{-1}·g·a, reduced to canonical representatives of M / A·M;
// sorted. Requires m >= v_p(mu(A)).
std::vector<Vec> table_star_orbit(const PrimeContext& ctx, const FiniteGroupTable& table,
                                  const Mat& A, const Vec& a);

// ---------------------------------------------------------------------------
// Exhaustive class catalogues

// Every extended double coset of multiplier valuation K: its full cell set,
// one exact representative pair, and a cell -> class index for membership
// queries. Built by sweeping diagonal seeds times all translation cells and
// closing each new class under the right action.
struct TildeClassCatalogue {
  int k = 0;
  std::vector<OrbitCells> classes;
  std::vector<Mat> seed_mats;  // exact diagonal representative
  std::vector<Vec> seed_vecs;  // exact translation representative
  std::unordered_map<TildeLeftCoset, int, TildeLeftCosetHash> cell_index;
  std::unordered_map<Mat, Lattice, MatHash> cell_lattice;  // label -> H·M + p^k·M

  // Class of the left coset, -1 if the label is unknown (never happens for
  // valuation-k cosets of a complete catalogue).
  int class_of(const PrimeContext& ctx, const TildeLeftCoset& lc) const;
};

TildeClassCatalogue enumerate_tilde_classes(const PrimeContext& ctx, const GammaGenSet& gens,
                                            int K, i64 budget);

// ---------------------------------------------------------------------------
// Direct structure constants

// Multiplicity of the extended double coset of (C, c) in the product of the
// extended double cosets of (A, a) and (B, b), counted from the definition:
// the number of left cosets beta of the (B, b) double coset with
// (C, c)·beta^{-1} inside the (A, a) double coset. All three pairs must be
// exact integral similitude data.
i64 structure_constant_mc(const PrimeContext& ctx, const GammaGenSet& gens, const Mat& A,
                          const Vec& a, const Mat& B, const Vec& b, const Mat& C, const Vec& c,
                          i64 budget = 10'000'000);

// Full cross-check of one product: for every extended double coset of the
// product valuation, the direct count above must equal the engine
// coefficient in T~(A,a)·T~(B,b).
VerificationReport verify_structure_constants(const PrimeContext& ctx, const GammaGenSet& gens,
                                              const Mat& A, const Vec& a, const Mat& B,
                                              const Vec& b, i64 budget = 10'000'000);

// ---------------------------------------------------------------------------
// Independent verifications of the frozen combinatorial inputs

// Generator-set validation: closure orders mod p^m against the group-order
// chain |G mod p^m| = |G mod p|·p^{dim·(m-1)}, dim = 2n^2+n+1, plus direct
// filtration of all d x d matrices over Z/p^m where that is feasible.
VerificationReport validate_generators(i64 p, i64 budget = 4'000'000);

// Genus-2 vector-orbit decomposition under the two congruence subgroups cut
// out by divisor patterns: pattern subgroups match conjugation subgroups,
// the five orbit identities hold mod p, the two disjoint partitions cover
// (Z/p)^4, and (p = 2) everything holds again mod 4.
VerificationReport verify_lemma_decomposition(i64 p, i64 budget = 4'000'000);

// Valuation-2 membership criterion at genus 2: a coset label has elementary
// divisor exponents (0,1,1,2) exactly when its reduction mod p has rank 1.
VerificationReport verify_rank_lemma(i64 p, i64 budget = 4'000'000);

// The explicit genus-2 representative lists: labels pairwise distinct with
// the family's divisor type, counts and label sets matching the structured
// double-coset enumeration, and the case-table filter matching the direct
// divisibility definition for every admissible (alpha, beta, k) up to
// k <= kmax.
VerificationReport verify_rep_lists(i64 p, int kmax = 4, i64 budget = 4'000'000);

// Degree formula deg T~(A,a) = [Gamma:Gamma_A]·p^{n·v}·|orbit| at p = 2,
// genus 2: the left factor from the structured enumeration, the orbit factor
// from conjugation-filtered tables, against both the element mass and the
// right-orbit coset count.
VerificationReport verify_degree_formula(i64 budget = 4'000'000);

// The product T~(A,0)·T~(p^k) expanded two ways: engine convolution plus
// decomposition versus the explicit-representative count of
// |Gamma \ {alpha in Gamma·A·Gamma : alpha·C in mu(A)·Delta,
//  alpha·c in mu(A)·M}| over an exhaustive catalogue of target classes.
VerificationReport verify_coset_count_product(i64 p, RepFamily family, int k,
                                              i64 budget = 10'000'000);

}  // namespace hk
