#pragma once
// Sublattices of (Z/p^k)^d, i.e. lattices L with p^k Z^d <= L <= Z^d, in a
// canonical Hermite basis. These are the "lattice" halves of the affine
// vector cells (offset + lattice) that elements are stored in.
//
// Canonical basis: rows b_0..b_{d-1}, upper triangular, b_i[i] = p^{e_i},
// entries above each pivot reduced into [0, p^{e_i}). The canonical coset
// representative produced by reduce() is the lexicographically smallest
// member of the coset (ascending-coordinate box reduction), which is the
// representative every label and table key uses.

#include <functional>
#include <vector>

#include "hecke/context.hpp"
#include "hecke/matrix.hpp"
#include "hecke/padic.hpp"

namespace hk {

struct Lattice {
  int k = 0;   // ambient exponent: subgroup of (Z/p^k)^d
  Mat basis;   // canonical d x d Hermite basis (rows)
  std::array<int, kMaxDim> e{};  // pivot exponents, e[i] = v_p(basis[i][i])

  int dim() const { return basis.d; }

  // log_p |L mod p^k| = d*k - sum(e_i)
  int log_size() const {
    int s = dim() * k;
    for (int i = 0; i < dim(); ++i) s -= e[size_t(i)];
    return s;
  }
  // log_p [Z^d : L] = sum(e_i)
  int log_index() const {
    int s = 0;
    for (int i = 0; i < dim(); ++i) s += e[size_t(i)];
    return s;
  }

  friend bool operator==(const Lattice& a, const Lattice& b) {
    return a.k == b.k && a.basis == b.basis;
  }
  friend bool operator!=(const Lattice& a, const Lattice& b) { return !(a == b); }
};

// Build the lattice generated by `gens` together with p^k Z^d.
Lattice lattice_from_gens(const PrimeContext& ctx, int k, const std::vector<Vec>& gens);

// The full lattice (Z/p^k)^d.
Lattice lattice_full(const PrimeContext& ctx, int k);

// The column span H*M + p^k Z^d (columns of H as generators).
Lattice lattice_columns(const PrimeContext& ctx, int k, const Mat& H);

// p^j * L + p^k Z^d inside the same ambient (Z/p^k)^d.
Lattice lattice_scale(const PrimeContext& ctx, const Lattice& L, int j);

// L1 + L2 (must share k).
Lattice lattice_sum(const PrimeContext& ctx, const Lattice& a, const Lattice& b);

// L1 intersect L2, via duality w.r.t. the mod-p^k pairing.
Lattice lattice_intersect(const PrimeContext& ctx, const Lattice& a, const Lattice& b);

// Reinterpret L in a new ambient exponent k' (adds p^{k'} Z^d; requires the
// lifted lattice to contain p^{k'} Z^d, i.e. k' >= every pivot exponent).
Lattice lattice_rebase(const PrimeContext& ctx, const Lattice& L, int new_k);

// Canonical representative of v + L (box reduction; lexicographically
// smallest member of the coset).
Vec lattice_reduce(const PrimeContext& ctx, const Lattice& L, Vec v);

inline bool lattice_contains(const PrimeContext& ctx, const Lattice& L, const Vec& v) {
  return lattice_reduce(ctx, L, v).is_zero();
}

// Streaming enumeration of all |L mod p^k| elements of L (as canonical
// vectors mod p^k). Order is a fixed odometer over the Hermite basis.
void lattice_for_each(const PrimeContext& ctx, const Lattice& L,
                      const std::function<void(const Vec&)>& fn);

// Coset representatives of `sub` inside `sup` (sub <= sup required; this is
// checked). The representatives are not themselves reduced mod sub (callers
// reduce whatever sum they form).
std::vector<Vec> lattice_quotient_reps(const PrimeContext& ctx, const Lattice& sup,
                                       const Lattice& sub);

}  // namespace hk
