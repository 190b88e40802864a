#pragma once
// Canonical cosets for the extended monoid (matrix, translation) with product
// (A,a)(B,b) = (AB, Ab + mu(B)a).
//
// A left coset Gamma~(C,c) is labeled by (H, v):
//   H = hnf_p(C)            — canonical under left GL(Z_p), hence under Gamma
//                             (equal-valuation similitudes in one GL-coset lie
//                             in one Gamma-coset);
//   v = X0·c mod p^k        — offset in label coordinates, X0 = H·C^{-1}.
// H itself need not be a similitude; it is a label. Arithmetic that needs an
// honest monoid member (forming products) carries representatives separately.
//
// The right action of a matrix generator g on labels is label-only:
//   H' = hnf_p(H·g),  v' = T·v with T = H'·ĝ·H^{-1}  (exact integers),
// and T maps the cell lattice H·M onto H'·M, so the translation-orbit cells
// (H, v + HM) are permuted; BFS therefore runs on cells, never on single
// cosets.

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hecke/cache.hpp"
#include "hecke/context.hpp"
#include "hecke/errors.hpp"
#include "hecke/gens.hpp"
#include "hecke/lattice.hpp"
#include "hecke/matrix.hpp"
#include "hecke/padic.hpp"

namespace hk {

struct TildeLeftCoset {
  Mat H;  // Hermite label of the matrix coset
  Vec v;  // offset in label coordinates, entries in [0, p^k)
  int k;  // multiplier valuation

  bool operator==(const TildeLeftCoset& o) const { return k == o.k && H == o.H && v == o.v; }
  std::string str() const;
};

struct TildeLeftCosetHash {
  std::size_t operator()(const TildeLeftCoset& t) const {
    return MatHash{}(t.H) * 1000003u ^ VecHash{}(t.v) ^ std::size_t(t.k);
  }
};

// Label of Gamma\Delta cosets: Hermite form with the valuation made explicit.
struct MatrixCosetKey {
  Mat H;
  int k;
};

// ---------------------------------------------------------------------------
// Canonicalization

struct CanonFull {
  TildeLeftCoset lc;
  Mat X0;         // H·C^{-1} reduced mod p^k (zero matrix when k = 0)
  Similitude sim;  // multiplier data of the *input* representative
};

// Strict entry point: C must be an exact integral similitude (else
// NotInMonoid). Canonical: every member of Gamma~(C,c) maps to the same label.
TildeLeftCoset canonicalize(const PrimeContext& ctx, const Mat& C, const Vec& c);
CanonFull canonicalize_full(const PrimeContext& ctx, const Mat& C, const Vec& c);

// Trusted entry point for representatives reduced mod p^emax: multiplier data
// is supplied instead of recomputed, and validation is modular.
CanonFull canonicalize_with(const PrimeContext& ctx, const Mat& C, const Vec& c,
                            const Similitude& sim);

// Tilde product of two explicit representatives, canonicalized:
// (C,c)(D,d) = (CD, Cd + mu(D)c).
TildeLeftCoset mul_rep(const PrimeContext& ctx, const Mat& C, const Vec& c, const Mat& D,
                       const Vec& d);

// Exact integer Z with H·Z = p^{n·k}·E for a Hermite label H.
Mat label_scaled_inverse(const PrimeContext& ctx, const Mat& H, int k);

// Hermite label of H·g given the label H (valuation k preserved: g is a unit
// similitude).
Mat label_right_mul(const PrimeContext& ctx, const Mat& H, const Mat& g, int k);

// ---------------------------------------------------------------------------
// Orbits

struct OrbitPart {
  Mat H;                     // matrix label
  Lattice HM;                // column lattice of H (plus p^k M): cell resolution
  std::vector<Vec> offsets;  // one reduced offset per cell, insertion order
};

struct OrbitCells {
  int k = 0;
  std::vector<OrbitPart> parts;

  i64 cell_count() const;
  // Total left cosets: every cell holds exactly p^{n·k} of them.
  i64 coset_count(const PrimeContext& ctx) const;
  bool contains(const PrimeContext& ctx, const TildeLeftCoset& lc) const;
};

// All left cosets of the double coset of the seeds, as translation-orbit
// cells. Throws BudgetExceeded when more than cell_budget cells appear.
OrbitCells right_orbit(const PrimeContext& ctx, const GammaGenSet& gens,
                       const std::vector<TildeLeftCoset>& seeds, i64 cell_budget);

// ---------------------------------------------------------------------------
// Double coset labels

struct DoubleCosetLabel {
  std::vector<int> divisors;  // elementary divisor exponents of the matrix part
  Mat Hmin;                   // least matrix label in the orbit (lex order)
  Vec vmin;                   // least reduced offset among cells at Hmin
  int k = 0;

  bool operator==(const DoubleCosetLabel& o) const {
    return k == o.k && divisors == o.divisors && Hmin == o.Hmin && vmin == o.vmin;
  }
  bool operator<(const DoubleCosetLabel& o) const;
  std::string str() const;
};

struct DoubleCosetLabelHash {
  std::size_t operator()(const DoubleCosetLabel& l) const {
    std::size_t h = MatHash{}(l.Hmin) ^ (VecHash{}(l.vmin) * 16777619u) ^ std::size_t(l.k);
    for (int e : l.divisors) h = h * 31 + std::size_t(e + 1);
    return h;
  }
};

DoubleCosetLabel orbit_label(const PrimeContext& ctx, const OrbitCells& orbit);
DoubleCosetLabel double_coset_label(const PrimeContext& ctx, const TildeLeftCoset& lc,
                                    const GammaGenSet& gens, i64 cell_budget);

// ---------------------------------------------------------------------------
// Matrix coset enumeration (vector parts ignored)

// Canonical labels of all left cosets of valuation k, BFS from the diagonal
// double-coset seeds; sorted lexicographically. Cached when cache is enabled.
std::vector<Mat> enumerate_matrix_cosets(const PrimeContext& ctx, int k, const GammaGenSet& gens,
                                         i64 budget, const CacheIO* cache = nullptr);

// Labels plus one honest similitude representative per coset (reduced mod
// p^emax) and its multiplier unit (mod p^{emax-k}), aligned by index and
// sorted by label.
struct CosetRepList {
  std::vector<Mat> labels;
  std::vector<Mat> reps;
  std::vector<i64> units;
};
CosetRepList enumerate_matrix_cosets_full(const PrimeContext& ctx, int k, const GammaGenSet& gens,
                                          i64 budget, const CacheIO* cache = nullptr);

// Diagonal double-coset seeds diag(p^{a_1..a_n}, p^{k-a_1..k-a_n}),
// a ascending, 2*a_n <= k.
std::vector<Mat> diagonal_seed_matrices(const PrimeContext& ctx, int k);

// ---------------------------------------------------------------------------
// Explicit representative lists (genus 2)

// diag(p^a, p^b, p^{k-a}, p^{k-b}).
Mat c_alpha_beta_k(const PrimeContext& ctx, int alpha, int beta, int k);

// Left-coset representatives of the two valuation-restricted double cosets at
// genus 2: the multiplier-p coset of diag(1,1,p,p) and the multiplier-p^2,
// divisor-type (0,1,1,2) coset. CaseOutOfRange unless n == 2.
std::vector<Mat> rep_list_ggAg(const PrimeContext& ctx);
std::vector<Mat> rep_list_ggBg(const PrimeContext& ctx);

enum class RepFamily { A, B };

// The sublist of rep_list_ggAg/ggBg whose members r satisfy
// r·C(alpha,beta,k) ≡ 0 mod p^{v_p(mu(r))} (the case tables of the
// enumeration corollaries). CaseOutOfRange outside the tables' domain
// (A: k >= 1, B: k >= 3; both need 0 <= alpha <= beta <= k - beta; n == 2).
std::vector<Mat> filtered_rep_list(const PrimeContext& ctx, RepFamily family, int alpha, int beta,
                                   int k);

}  // namespace hk
