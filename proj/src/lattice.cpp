#include "hecke/lattice.hpp"

#include <cassert>

namespace hk {

namespace {

// Row Hermite form of an r x d row stack (r >= d) whose row lattice contains
// p^k Z^d. Arithmetic runs mod p^{d*k+2}; the result rows are exact.
Mat stack_hnf(const PrimeContext& ctx, int k, std::vector<Vec> rows) {
  const int d = ctx.d;
  const int bound = d * k;
  const i64 P = ctx.pk(bound + 2);
  for (auto& r : rows) r = reduce_mod(r, P);

  for (int j = 0; j < d; ++j) {
    int best = -1, bestv = kValInfinity;
    for (size_t i = size_t(j); i < rows.size(); ++i) {
      int v = vp(rows[i][j], ctx.p);
      if (v < bestv) { bestv = v; best = int(i); }
    }
    // p^k e_j is always among the generators, so a pivot exists with e <= k.
    if (bestv > k)
      throw NonMaximalRank("lattice stack lost its p^k component");
    std::swap(rows[size_t(j)], rows[size_t(best)]);
    const i64 pe = ipow(ctx.p, bestv);
    const i64 w = unit_inv_mod(rows[size_t(j)][j] / pe, P);
    for (int c = 0; c < d; ++c) rows[size_t(j)][c] = emod128(i128(rows[size_t(j)][c]) * w, P);
    rows[size_t(j)][j] = pe;
    for (size_t i = size_t(j) + 1; i < rows.size(); ++i) {
      if (rows[i][j] == 0) continue;
      i64 q = rows[i][j] / pe;
      for (int c = 0; c < d; ++c)
        rows[i][c] = emod128(i128(rows[i][c]) - i128(q) * rows[size_t(j)][c], P);
      rows[i][j] = 0;
    }
  }
  // Column-reduce above the pivots.
  Mat B(d);
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < d; ++c) B.at(i, c) = rows[size_t(i)][c];
  for (int j = 1; j < d; ++j) {
    const i64 pe = B.at(j, j);
    for (int i = 0; i < j; ++i) {
      i64 q = B.at(i, j) / pe;
      if (q != 0)
        for (int c = 0; c < d; ++c)
          B.at(i, c) = emod128(i128(B.at(i, c)) - i128(q) * B.at(j, c), P);
    }
  }
  // Entries are now in [0, p^{e_col}) above pivots; reduce the whole matrix
  // mod p^k as well so the basis embeds in the ambient box.
  return B;
}

Lattice finalize(const PrimeContext& ctx, int k, Mat B) {
  Lattice L;
  L.k = k;
  L.basis = B;
  for (int i = 0; i < ctx.d; ++i) L.e[size_t(i)] = vp(B.at(i, i), ctx.p);
  return L;
}

}  // namespace

Lattice lattice_from_gens(const PrimeContext& ctx, int k, const std::vector<Vec>& gens) {
  const int d = ctx.d;
  if (k == 0) {
    // Ambient group is trivial.
    return finalize(ctx, 0, Mat::identity(d));
  }
  std::vector<Vec> rows;
  rows.reserve(gens.size() + size_t(d));
  const i64 pkv = ctx.pk(k);
  for (const auto& g : gens) rows.push_back(reduce_mod(g, pkv));
  for (int i = 0; i < d; ++i) {
    Vec r(d);
    r[i] = pkv;
    rows.push_back(r);
  }
  return finalize(ctx, k, stack_hnf(ctx, k, std::move(rows)));
}

Lattice lattice_full(const PrimeContext& ctx, int k) {
  return finalize(ctx, k, Mat::identity(ctx.d));
}

Lattice lattice_columns(const PrimeContext& ctx, int k, const Mat& H) {
  std::vector<Vec> gens;
  gens.reserve(size_t(ctx.d));
  for (int j = 0; j < ctx.d; ++j) {
    Vec c(ctx.d);
    for (int i = 0; i < ctx.d; ++i) c[i] = H.at(i, j);
    gens.push_back(c);
  }
  return lattice_from_gens(ctx, k, gens);
}

Lattice lattice_scale(const PrimeContext& ctx, const Lattice& L, int j) {
  std::vector<Vec> gens;
  const i64 pj = ctx.pk(j);
  for (int i = 0; i < ctx.d; ++i) {
    Vec r(ctx.d);
    for (int c = 0; c < ctx.d; ++c) r[c] = checked_i64(i128(L.basis.at(i, c)) * pj);
    gens.push_back(r);
  }
  return lattice_from_gens(ctx, L.k, gens);
}

Lattice lattice_sum(const PrimeContext& ctx, const Lattice& a, const Lattice& b) {
  assert(a.k == b.k);
  std::vector<Vec> gens;
  for (int i = 0; i < ctx.d; ++i) {
    Vec r(ctx.d), s(ctx.d);
    for (int c = 0; c < ctx.d; ++c) { r[c] = a.basis.at(i, c); s[c] = b.basis.at(i, c); }
    gens.push_back(r);
    gens.push_back(s);
  }
  return lattice_from_gens(ctx, a.k, gens);
}

namespace {

// Dual lattice D(L) = { w : <b, w> == 0 mod p^k for all rows b of L }.
Lattice lattice_dual(const PrimeContext& ctx, const Lattice& L) {
  const int d = ctx.d;
  const int k = L.k;
  if (k == 0) return lattice_full(ctx, 0);
  SmithTriple t = smith_with_transforms(ctx, L.basis, k);
  // basis * w == 0  <=>  diag(p^f) * (V^{-1}... ) — with U*B*V = D we get
  // B w = 0 mod p^k  <=>  D (V^{-1} w) ... careful: B = U^{-1} D V^{-1}, so
  // B w == 0  <=>  D V^{-1} w == 0  <=>  (V^{-1} w)_i in p^{k - f_i} Z.
  // Hence w in V * span(p^{max(k - f_i, 0)} e_i) (+ p^k Z^d).
  std::vector<Vec> gens;
  for (int i = 0; i < d; ++i) {
    int g = k - t.f[size_t(i)];
    if (g < 0) g = 0;
    const i64 pg = ctx.pk(g);
    Vec col(d);
    for (int r = 0; r < d; ++r) col[r] = emod128(i128(t.V.at(r, i)) * pg, ctx.pk(k));
    gens.push_back(col);
  }
  return lattice_from_gens(ctx, k, gens);
}

}  // namespace

Lattice lattice_intersect(const PrimeContext& ctx, const Lattice& a, const Lattice& b) {
  assert(a.k == b.k);
  if (a.k == 0) return a;
  return lattice_dual(ctx, lattice_sum(ctx, lattice_dual(ctx, a), lattice_dual(ctx, b)));
}

Lattice lattice_rebase(const PrimeContext& ctx, const Lattice& L, int new_k) {
  std::vector<Vec> gens;
  for (int i = 0; i < ctx.d; ++i) {
    if (L.e[size_t(i)] > new_k)
      throw std::invalid_argument("lattice_rebase: lattice does not contain p^k' Z^d");
    Vec r(ctx.d);
    for (int c = 0; c < ctx.d; ++c) r[c] = L.basis.at(i, c);
    gens.push_back(r);
  }
  return lattice_from_gens(ctx, new_k, gens);
}

Vec lattice_reduce(const PrimeContext& ctx, const Lattice& L, Vec v) {
  if (L.k == 0) return Vec(ctx.d);
  const i64 pkv = ctx.pk(L.k);
  v = reduce_mod(v, pkv);
  for (int i = 0; i < ctx.d; ++i) {
    const i64 pe = L.basis.at(i, i);
    i64 q = v[i] / pe;
    if (q != 0) {
      for (int c = i; c < ctx.d; ++c)
        v[c] = emod128(i128(v[c]) - i128(q) * L.basis.at(i, c), pkv);
    }
  }
  return v;
}

void lattice_for_each(const PrimeContext& ctx, const Lattice& L,
                      const std::function<void(const Vec&)>& fn) {
  const int d = ctx.d;
  if (L.k == 0) {
    fn(Vec(d));
    return;
  }
  const i64 pkv = ctx.pk(L.k);
  std::array<i64, kMaxDim> range{}, t{};
  for (int i = 0; i < d; ++i) range[size_t(i)] = ctx.pk(L.k - L.e[size_t(i)]);
  Vec cur(d);  // running sum of t_i * b_i mod p^k
  // Odometer over mixed radix `range`, maintaining cur incrementally.
  std::function<void(int)> rec = [&](int i) {
    if (i == d) { fn(cur); return; }
    Vec saved = cur;
    for (i64 step = 0; step < range[size_t(i)]; ++step) {
      rec(i + 1);
      for (int c = i; c < d; ++c) cur[c] = emod(cur[c] + L.basis.at(i, c), pkv);
    }
    cur = saved;
  };
  (void)t;
  rec(0);
}

std::vector<Vec> lattice_quotient_reps(const PrimeContext& ctx, const Lattice& sup,
                                       const Lattice& sub) {
  const int d = ctx.d;
  assert(sup.k == sub.k);
  std::vector<Vec> out;
  if (sup.k == 0) {
    out.push_back(Vec(d));
    return out;
  }
  const i64 pkv = ctx.pk(sup.k);
  // sub = T * sup with T upper triangular, diag(T)_i = p^{f_i - e_i}; the
  // mixed-radix box over those ratios enumerates the quotient exactly once.
  std::array<i64, kMaxDim> range{};
  for (int i = 0; i < d; ++i) {
    int diff = sub.e[size_t(i)] - sup.e[size_t(i)];
    if (diff < 0)
      throw std::invalid_argument("lattice_quotient_reps: sub is not inside sup");
    range[size_t(i)] = ctx.pk(diff);
  }
  Vec cur(d);
  std::function<void(int)> rec = [&](int i) {
    if (i == d) { out.push_back(cur); return; }
    Vec saved = cur;
    for (i64 step = 0; step < range[size_t(i)]; ++step) {
      rec(i + 1);
      for (int c = i; c < d; ++c) cur[c] = emod(cur[c] + sup.basis.at(i, c), pkv);
    }
    cur = saved;
  };
  rec(0);
  return out;
}

}  // namespace hk
