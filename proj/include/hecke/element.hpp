#pragma once
// Ring elements over the labeled coset spaces.
//
// A MatrixElement is a finite Q-linear combination of matrix left cosets of a
// fixed multiplier valuation k, keyed by Hermite label.
//
// A HeckeElement is a finite Q-linear combination of extended-monoid left
// cosets (H, v). Offsets are stored in compressed cells: a VectorCell
// (v, L, c) assigns the value c to every coset (H, w) with w ≡ v mod L. Cell
// lattices always contain the part's column lattice H·M + p^k·M (cosets which
// differ by a translation of the matrix part can never be separated), so a
// part's cells are unions of translation-orbit cells. Cells of one part may
// overlap; the element's value at a coset is the sum over covering cells.
//
// Every part carries an honest monoid representative R of its matrix coset
// (reduced mod p^emax) alongside the Hermite label H: labels are canonical
// but need not be similitudes, and forming products requires genuine monoid
// members. All constructors below derive R from exact seeds, so the invariant
// "R is a valid representative of Gamma·H" holds throughout.
//
// The product works cell by cell. For an x-cell on part (Hx, Rx) and a y-cell
// on part (Hy, Ry), every representative pair multiplies into the same matrix
// coset H' = hnf(Rx·Ry), and the offset map is affine:
//     v' = M1·w + M2·v,   M1 = H'·Hy^{-1},   M2 = H'·R̂y·Hx^{-1},
// both exact integer matrices (computed by exact division). The image of the
// cell pair is the single cell (M1·w̄ + M2·v̄, L') with
//     L' = M1·Ly + M2·Lx  (ambient p^{kx+ky}),
// carrying coefficient cx·cy·p^{ls(Lx)+ls(Ly)−ls(L')}: offset-lift carries
// land in M1·Ly ⊆ L', so the class map (λ, ξ) ↦ M1·λ + M2·ξ is a surjective
// homomorphism onto L'-classes with equal fibers. Summing over cell pairs
// therefore reproduces the full convolution over representative pairs without
// expanding either factor.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hecke/arith.hpp"
#include "hecke/cache.hpp"
#include "hecke/context.hpp"
#include "hecke/cosets.hpp"
#include "hecke/gens.hpp"
#include "hecke/lattice.hpp"
#include "hecke/matrix.hpp"
#include "json.hpp"

namespace hk {

// ---------------------------------------------------------------------------
// Types

struct VectorCell {
  Vec v;      // reduced mod L (lattice_reduce)
  Lattice L;  // offset resolution; always contains the part's column lattice
  Rat c;
};

struct ElemPart {
  Mat H;         // Hermite label of the matrix coset
  Mat R;         // honest representative, reduced mod p^emax
  i64 unit = 1;  // unit factor of mu(R), mod p^{emax-k}
  std::vector<VectorCell> cells;
};

struct HeckeElement {
  int k = 0;                       // multiplier valuation (homogeneous)
  bool invariant_claimed = false;  // set by constructors that guarantee it
  std::vector<ElemPart> parts;

  bool empty() const { return parts.empty(); }
  int find_part(const Mat& H) const;  // -1 if absent
  ElemPart& touch_part(const Mat& H, const Mat& R, i64 unit);
  // Reduces v mod L, merges into an existing (v, L) cell or appends.
  void add_cell(const PrimeContext& ctx, ElemPart& part, Vec v, const Lattice& L, const Rat& c);
  // Drops zero cells and empty parts, rebuilds the index, sorts for
  // deterministic iteration.
  void consolidate();

  // Value on a single left coset: sum of covering cells' coefficients.
  Rat value_at(const PrimeContext& ctx, const TildeLeftCoset& lc) const;

 private:
  std::unordered_map<Mat, int, MatHash> index_;
};

struct MatrixPart {
  Mat H;
  Mat R;
  i64 unit = 1;
  Rat c;
};

struct MatrixElement {
  int k = 0;
  std::vector<MatrixPart> parts;

  bool empty() const { return parts.empty(); }
  int find_part(const Mat& H) const;
  // Adds c on the coset of (H, R); merges with an existing part.
  void add_part(const Mat& H, const Mat& R, i64 unit, const Rat& c);
  void consolidate();

 private:
  std::unordered_map<Mat, int, MatHash> index_;
};

// ---------------------------------------------------------------------------
// Matrix-ring constructors and operations

MatrixElement mx_zero(int k);
MatrixElement mx_identity(const PrimeContext& ctx);
// The one-coset element of the scalar matrix p^m·E (multiplier p^{2m},
// valuation 2m), coefficient 1.
MatrixElement mx_scalar(const PrimeContext& ctx, int m);
// All left cosets of Gamma·A·Gamma with coefficient 1; A must be an exact
// integral similitude.
MatrixElement matrix_double_coset(const PrimeContext& ctx, const Mat& A, const GammaGenSet& gens,
                                  i64 budget);
// All valuation-k left cosets with coefficient 1.
MatrixElement matrix_full_level(const PrimeContext& ctx, int k, const GammaGenSet& gens,
                                i64 budget, const CacheIO* cache = nullptr);

MatrixElement matrix_mul(const PrimeContext& ctx, const MatrixElement& a, const MatrixElement& b);
MatrixElement matrix_add(const MatrixElement& a, const MatrixElement& b);
MatrixElement matrix_scale(const Rat& r, const MatrixElement& a);
bool matrix_equal(const MatrixElement& a, const MatrixElement& b);
Rat deg(const MatrixElement& a);

// ---------------------------------------------------------------------------
// Extended-ring constructors

HeckeElement he_zero(int k);
HeckeElement he_identity(const PrimeContext& ctx);
// Image of a matrix element: one cell (H, 0, HM) per coset, same coefficient.
HeckeElement s_embed(const PrimeContext& ctx, const MatrixElement& a);
// Full valuation-k element: every matrix coset with every translation,
// coefficient 1 (one full-lattice cell per part). k = 0 gives the identity.
HeckeElement build_Ttilde_p(const PrimeContext& ctx, int k, const GammaGenSet& gens, i64 budget,
                            const CacheIO* cache = nullptr);
// Single extended double coset of (A, a); A must be an exact integral
// similitude.
HeckeElement tilde_double_coset(const PrimeContext& ctx, const Mat& A, const Vec& a,
                                const GammaGenSet& gens, i64 budget);
// Union of the extended double cosets of (A, nu), A over seed_reps (exact
// similitudes of one valuation), nu over the column lattice of
// translation_cols — each distinct double coset once, coefficient 1.
HeckeElement build_structured(const PrimeContext& ctx, const std::vector<Mat>& seed_reps,
                              const Mat& translation_cols, const GammaGenSet& gens, i64 budget);

// ---------------------------------------------------------------------------
// Extended-ring operations

HeckeElement he_add(const HeckeElement& a, const HeckeElement& b);
HeckeElement he_scale(const Rat& r, const HeckeElement& a);
inline HeckeElement he_sub(const HeckeElement& a, const HeckeElement& b) {
  return he_add(a, he_scale(Rat(-1), b));
}

// Exact equality as functions on cosets: per part, both sides are refined to
// the common intersection lattice and compared class by class. Throws
// BudgetExceeded when the refinement needs more than class_budget classes.
bool equal(const PrimeContext& ctx, const HeckeElement& a, const HeckeElement& b,
           i64 class_budget = 10'000'000);
inline bool is_zero(const PrimeContext& ctx, const HeckeElement& a,
                    i64 class_budget = 10'000'000) {
  return equal(ctx, a, he_zero(a.k), class_budget);
}

// True when ring operations at total valuation K stay inside the validated
// exact-integer range: the cell-lattice arithmetic works modulo p^{d·K+2},
// which must not exceed p^emax.
inline bool valuation_in_range(const PrimeContext& ctx, int K) {
  return ctx.d * K + 2 <= ctx.emax;
}

// Convolution product. Both factors must carry the claimed-invariant flag
// (InvarianceNotClaimed otherwise); pair_budget caps processed cell pairs.
// Requires valuation_in_range(ctx, x.k + y.k).
HeckeElement hecke_mul(const PrimeContext& ctx, const HeckeElement& x, const HeckeElement& y,
                       i64 pair_budget = 10'000'000);

// Coefficient of the single left coset `target` in x·y, computed without
// materializing the product: part pairs whose matrix label misses target.H
// are skipped before any cell work. Same preconditions as hecke_mul;
// pair_budget caps the part pairs examined.
Rat hecke_mul_value_at(const PrimeContext& ctx, const HeckeElement& x, const HeckeElement& y,
                       const TildeLeftCoset& target, i64 pair_budget = 10'000'000);

// Explicit coset expansion with integer multiplicities (NonIntegral when a
// coset's accumulated value is not an integer); sorted by (H, v).
std::vector<std::pair<TildeLeftCoset, i64>> expand(const PrimeContext& ctx, const HeckeElement& x,
                                                   i64 budget = 10'000'000);

// Translation-doubling endomorphism: cell (v, L, c) maps to
// (p·v, p·L + HM + p^k·M, c·|L|/|L'|). Mass-preserving; stabilizes after at
// most k iterations.
HeckeElement theta(const PrimeContext& ctx, const HeckeElement& x);
HeckeElement theta_pow(const PrimeContext& ctx, const HeckeElement& x, int m);
// theta with its defining certificate checked by direct convolution:
// s(<p>)·theta(x) must equal x·s(<p>). Throws HeckeError on violation.
HeckeElement theta_certified(const PrimeContext& ctx, const HeckeElement& x,
                             i64 pair_budget = 10'000'000);

// Stabilize theta, then invert the embedding s: every part must collapse to
// the single cell (0, HM) (NotInImageOfS otherwise); the matrix coefficient
// is that cell's coefficient.
MatrixElement phi(const PrimeContext& ctx, const HeckeElement& x);

// Total mass: sum over cells of coefficient × cell size (number of cosets).
Rat deg(const PrimeContext& ctx, const HeckeElement& x);

// Decomposition into extended double cosets with constant multiplicity
// (NonConstantMultiplicity when the value is not constant on some orbit,
// NonIntegral when a multiplicity is not an integer); sorted by label.
struct DecomposePiece {
  DoubleCosetLabel label;
  i64 mult = 0;
};
std::vector<DecomposePiece> decompose(const PrimeContext& ctx, const HeckeElement& x,
                                      const GammaGenSet& gens, i64 budget = 10'000'000);

// True iff the support decomposes into full right orbits with constant
// (possibly non-integer) multiplicity.
bool validate_invariance(const PrimeContext& ctx, const HeckeElement& x, const GammaGenSet& gens,
                         i64 budget = 10'000'000);

// Best-effort human-readable rendering (recognizes scalar multiples of the
// identity and of embedded scalar-matrix cosets; falls back to a summary).
std::string pretty_print(const PrimeContext& ctx, const HeckeElement& x);

// Exact monoid representative (C, c) of the coset (part.H, v). Requires
// n·k + k + 2 <= emax.
std::pair<Mat, Vec> coset_representative(const PrimeContext& ctx, int k, const ElemPart& part,
                                         const Vec& v);

// ---------------------------------------------------------------------------
// Serialization (versioned; used by the disk cache and the CLI dump)

nlohmann::json element_to_json(const PrimeContext& ctx, const HeckeElement& x);
HeckeElement element_from_json(const PrimeContext& ctx, const nlohmann::json& j);

}  // namespace hk
