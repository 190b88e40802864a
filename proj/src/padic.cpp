#include "hecke/padic.hpp"

#include <algorithm>
#include <cassert>

namespace hk {

Similitude similitude_of(const PrimeContext& ctx, const Mat& M) {
  if (M.d != ctx.d) throw std::invalid_argument("similitude_of: dimension mismatch");
  Mat G = mul(M.transpose(), mul(ctx.J, M));
  i64 mu = G.at(0, ctx.n);  // J has a 1 in position (0, n)
  if (mu == 0) throw NotSimilitude("multiplier is zero (matrix " + M.str() + ")");
  for (int i = 0; i < ctx.d; ++i)
    for (int j = 0; j < ctx.d; ++j) {
      if (G.at(i, j) != checked_i64(i128(mu) * ctx.J.at(i, j)))
        throw NotSimilitude("M^T J M is not a scalar multiple of J (matrix " + M.str() + ")");
    }
  Similitude s;
  s.mu = mu;
  s.k = vp(mu, ctx.p);
  s.unit = mu / ipow(ctx.p, s.k);
  return s;
}

i64 unit_inv_mod(i64 u, i64 m) {
  if (m <= 0) throw std::invalid_argument("unit_inv_mod: modulus must be positive");
  i64 a = emod(u, m), b = m;
  // extended Euclid: track x with a*x == gcd (mod m)
  i64 x0 = 1, x1 = 0, r0 = a, r1 = b;
  while (r1 != 0) {
    i64 q = r0 / r1;
    i64 r2 = r0 - q * r1;
    i64 x2 = checked_i64(i128(x0) - i128(q) * x1);
    r0 = r1; r1 = r2;
    x0 = x1; x1 = x2;
  }
  if (r0 != 1) throw NotAUnit(std::to_string(u) + " modulo " + std::to_string(m));
  return emod(x0, m);
}

namespace {

// Minimal-valuation pivot among rows i in [from, d) of column j.
// Returns (row, valuation), valuation = kValInfinity when the column vanishes.
std::pair<int, int> pivot_row(const Mat& A, int from, int j, i64 p) {
  int best = -1, bestv = kValInfinity;
  for (int i = from; i < A.d; ++i) {
    int v = vp(A.at(i, j), p);
    if (v < bestv) { bestv = v; best = i; }
  }
  return {best, bestv};
}

void swap_rows(Mat& A, int i, int j) {
  if (i == j) return;
  for (int c = 0; c < A.d; ++c) std::swap(A.at(i, c), A.at(j, c));
}

void scale_row_mod(Mat& A, int i, i64 c, i64 P) {
  for (int j = 0; j < A.d; ++j) A.at(i, j) = emod128(i128(A.at(i, j)) * c, P);
}

// row_i -= q * row_j (mod P)
void axpy_row_mod(Mat& A, int i, int j, i64 q, i64 P) {
  for (int c = 0; c < A.d; ++c)
    A.at(i, c) = emod128(i128(A.at(i, c)) - i128(q) * A.at(j, c), P);
}

}  // namespace

Mat hnf_p(const PrimeContext& ctx, const Mat& M, int det_val_bound) {
  if (M.d > kMaxDim) throw std::invalid_argument("hnf_p: bad dimension");
  const int d = M.d;
  const i64 P = ctx.pk(det_val_bound + 2);
  Mat A = reduce_mod(M, P);

  std::vector<int> e(size_t(d), 0);
  for (int j = 0; j < d; ++j) {
    auto [row, v] = pivot_row(A, j, j, ctx.p);
    if (v > det_val_bound)
      throw NonMaximalRank("column " + std::to_string(j) +
                           " has no pivot within valuation bound (input " + M.str() + ")");
    swap_rows(A, j, row);
    e[size_t(j)] = v;
    const i64 pe = ipow(ctx.p, v);
    const i64 u = A.at(j, j) / pe;  // unit: representative has exact p-part p^v
    scale_row_mod(A, j, unit_inv_mod(u, P), P);
    A.at(j, j) = pe;  // u * u^{-1} == 1 (mod P) makes this exact; pin it
    for (int i = j + 1; i < d; ++i) {
      if (A.at(i, j) == 0) continue;
      axpy_row_mod(A, i, j, A.at(i, j) / pe, P);
      A.at(i, j) = 0;
    }
  }
  // Reduce above-pivot entries into [0, p^{e_j}).
  for (int j = 1; j < d; ++j) {
    const i64 pe = ipow(ctx.p, e[size_t(j)]);
    for (int i = 0; i < j; ++i) {
      i64 q = A.at(i, j) / pe;
      if (q != 0) axpy_row_mod(A, i, j, q, P);
    }
  }
  return A;
}

std::vector<int> smith_exponents(const PrimeContext& ctx, const Mat& M, int det_val_bound) {
  const int d = M.d;
  const i64 P = ctx.pk(det_val_bound + 2);
  Mat A = reduce_mod(M, P);
  std::vector<int> out;
  for (int j = 0; j < d; ++j) {
    // global minimal valuation in the trailing submatrix
    int bi = -1, bj = -1, bv = kValInfinity;
    for (int i = j; i < d; ++i)
      for (int c = j; c < d; ++c) {
        int v = vp(A.at(i, c), ctx.p);
        if (v < bv) { bv = v; bi = i; bj = c; }
      }
    if (bv > det_val_bound)
      throw NonMaximalRank("smith: rank drop within valuation bound (input " + M.str() + ")");
    swap_rows(A, j, bi);
    for (int i = 0; i < d; ++i) std::swap(A.at(i, j), A.at(i, bj));  // column swap
    const i64 pe = ipow(ctx.p, bv);
    scale_row_mod(A, j, unit_inv_mod(A.at(j, j) / pe, P), P);
    A.at(j, j) = pe;
    for (int i = j + 1; i < d; ++i) {
      if (A.at(i, j) != 0) { axpy_row_mod(A, i, j, A.at(i, j) / pe, P); A.at(i, j) = 0; }
    }
    for (int c = j + 1; c < d; ++c) {
      i64 q = A.at(j, c) / pe;  // entries right of pivot have valuation >= bv
      if (A.at(j, c) % pe != 0)
        throw NonMaximalRank("smith: pivot fails to divide row entry");
      if (q != 0)
        for (int i = 0; i < d; ++i)
          A.at(i, c) = emod128(i128(A.at(i, c)) - i128(q) * A.at(i, j), P);
    }
    out.push_back(bv);
  }
  assert(std::is_sorted(out.begin(), out.end()));
  return out;
}

SmithTriple smith_with_transforms(const PrimeContext& ctx, const Mat& M, int modexp) {
  const int d = M.d;
  const i64 P = ctx.pk(modexp);
  Mat A = reduce_mod(M, P);
  Mat U = Mat::identity(d), V = Mat::identity(d);

  auto scale_row2 = [&](Mat& X, int i, i64 c) {
    for (int j = 0; j < d; ++j) X.at(i, j) = emod128(i128(X.at(i, j)) * c, P);
  };
  auto axpy_row2 = [&](Mat& X, int i, int j, i64 q) {
    for (int c = 0; c < d; ++c)
      X.at(i, c) = emod128(i128(X.at(i, c)) - i128(q) * X.at(j, c), P);
  };
  auto axpy_col = [&](Mat& X, int cdst, int csrc, i64 q) {
    for (int i = 0; i < d; ++i)
      X.at(i, cdst) = emod128(i128(X.at(i, cdst)) - i128(q) * X.at(i, csrc), P);
  };

  SmithTriple t;
  for (int j = 0; j < d; ++j) {
    int bi = -1, bj = -1, bv = kValInfinity;
    for (int i = j; i < d; ++i)
      for (int c = j; c < d; ++c) {
        int v = vp(A.at(i, c), ctx.p);
        if (v < bv) { bv = v; bi = i; bj = c; }
      }
    if (bv >= modexp) {
      // The rest of the matrix vanishes mod P: exponents saturate at modexp.
      for (int r = j; r < d; ++r) t.f.push_back(modexp);
      break;
    }
    swap_rows(A, j, bi); swap_rows(U, j, bi);
    for (int i = 0; i < d; ++i) { std::swap(A.at(i, j), A.at(i, bj)); std::swap(V.at(i, j), V.at(i, bj)); }
    const i64 pe = ipow(ctx.p, bv);
    const i64 w = unit_inv_mod(A.at(j, j) / pe, P);
    scale_row2(A, j, w); scale_row2(U, j, w);
    A.at(j, j) = pe;
    for (int i = j + 1; i < d; ++i) {
      if (A.at(i, j) != 0) {
        i64 q = A.at(i, j) / pe;
        axpy_row2(A, i, j, q); axpy_row2(U, i, j, q);
        A.at(i, j) = 0;
      }
    }
    for (int c = j + 1; c < d; ++c) {
      if (A.at(j, c) != 0) {
        i64 q = A.at(j, c) / pe;
        axpy_col(A, c, j, q); axpy_col(V, c, j, q);
        A.at(j, c) = 0;
      }
    }
    t.f.push_back(bv);
  }
  t.U = U;
  t.V = V;
  return t;
}

Mat scaled_inverse(const PrimeContext& ctx, const Mat& M) {
  Similitude s = similitude_of(ctx, M);
  // M^T J M = mu J  =>  M^{-1} = mu^{-1} (-J) M^T J, so mu * M^{-1} = -J M^T J.
  Mat hat = mul(scale(ctx.J, -1), mul(M.transpose(), ctx.J));
  Mat check = mul(M, hat);
  for (int i = 0; i < ctx.d; ++i)
    for (int j = 0; j < ctx.d; ++j)
      if (check.at(i, j) != (i == j ? s.mu : 0))
        throw NotSimilitude("scaled inverse check failed for " + M.str());
  return hat;
}

Mat j_twist(const PrimeContext& ctx, const Mat& M) {
  return scale(mul(ctx.J, mul(M.transpose(), ctx.J)), -1);
}

int rank_mod_p(const PrimeContext& ctx, const Mat& M) {
  const int d = M.d;
  Mat A = reduce_mod(M, ctx.p);
  int rank = 0;
  for (int j = 0; j < d && rank < d; ++j) {
    int piv = -1;
    for (int i = rank; i < d; ++i)
      if (A.at(i, j) != 0) { piv = i; break; }
    if (piv < 0) continue;
    swap_rows(A, rank, piv);
    i64 inv = unit_inv_mod(A.at(rank, j), ctx.p);
    for (int c = 0; c < d; ++c) A.at(rank, c) = emod128(i128(A.at(rank, c)) * inv, ctx.p);
    for (int i = 0; i < d; ++i) {
      if (i != rank && A.at(i, j) != 0) {
        i64 q = A.at(i, j);
        for (int c = 0; c < d; ++c)
          A.at(i, c) = emod128(i128(A.at(i, c)) - i128(q) * A.at(rank, c), ctx.p);
      }
    }
    ++rank;
  }
  return rank;
}

i64 det_exact(const Mat& M) {
  // Bareiss fraction-free elimination in __int128.
  const int d = M.d;
  std::array<i128, kMaxDim * kMaxDim> a{};
  for (int i = 0; i < d * d; ++i) a[size_t(i)] = M.a[size_t(i)];
  auto at = [&](int i, int j) -> i128& { return a[size_t(i * d + j)]; };
  i128 prev = 1;
  int sign = 1;
  for (int k = 0; k < d - 1; ++k) {
    if (at(k, k) == 0) {
      int s = -1;
      for (int i = k + 1; i < d; ++i)
        if (at(i, k) != 0) { s = i; break; }
      if (s < 0) return 0;
      for (int j = 0; j < d; ++j) std::swap(at(k, j), at(s, j));
      sign = -sign;
    }
    for (int i = k + 1; i < d; ++i)
      for (int j = k + 1; j < d; ++j)
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
    prev = at(k, k);
  }
  return checked_i64(sign * at(d - 1, d - 1), "determinant");
}

Mat scaled_inverse_triangular(const PrimeContext& ctx, const Mat& T, int scale_exp) {
  const int d = T.d;
  const i64 scale = ctx.pk(scale_exp);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j)
      if (T.at(i, j) != 0)
        throw std::invalid_argument("scaled_inverse_triangular: matrix is not upper triangular");
  Mat Z{};
  Z.d = d;
  for (int col = 0; col < d; ++col) {
    // Solve T * z = scale * e_col bottom-up.
    for (int i = d - 1; i >= 0; --i) {
      i128 rhs = (i == col) ? i128(scale) : 0;
      for (int l = i + 1; l < d; ++l) rhs -= i128(T.at(i, l)) * Z.at(l, col);
      i64 piv = T.at(i, i);
      if (piv == 0 || rhs % piv != 0)
        throw NonIntegral("triangular backsolve: pivot " + std::to_string(piv) +
                          " does not divide the running sum");
      Z.at(i, col) = checked_i64(rhs / piv, "triangular inverse entry");
    }
  }
  return Z;
}

Mat mul_div_mod(const Mat& A, const Mat& B, i64 divisor, i64 modulus) {
  if (divisor <= 0 || modulus <= 0)
    throw std::invalid_argument("mul_div_mod: divisor and modulus must be positive");
  Mat r(A.d);
  for (int i = 0; i < A.d; ++i)
    for (int j = 0; j < A.d; ++j) {
      i128 s = 0;
      for (int k = 0; k < A.d; ++k) s += i128(A.at(i, k)) * B.at(k, j);
      if (s % divisor != 0)
        throw NonIntegral("mul_div_mod: product entry not divisible by " + std::to_string(divisor));
      r.at(i, j) = emod128(s / divisor, modulus);
    }
  return r;
}

}  // namespace hk
