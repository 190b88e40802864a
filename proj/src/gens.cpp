#include "hecke/gens.hpp"

#include "hecke/padic.hpp"

namespace hk {

namespace {

// [[I, S], [0, I]] (upper) or [[I, 0], [S, I]] (lower) for symmetric S.
Mat transvection(const PrimeContext& ctx, const Mat& S, bool upper) {
  Mat g = Mat::identity(ctx.d);
  for (int i = 0; i < ctx.n; ++i)
    for (int j = 0; j < ctx.n; ++j) {
      if (upper)
        g.at(i, ctx.n + j) = S.at(i, j);
      else
        g.at(ctx.n + i, j) = S.at(i, j);
    }
  return g;
}

// [[U, 0], [0, U^{-T}]] for U in GL_n(Z); Uinv must be the exact inverse.
Mat gl_embed(const PrimeContext& ctx, const Mat& U, const Mat& Uinv) {
  Mat g(ctx.d);
  for (int i = 0; i < ctx.n; ++i)
    for (int j = 0; j < ctx.n; ++j) {
      g.at(i, j) = U.at(i, j);
      g.at(ctx.n + i, ctx.n + j) = Uinv.at(j, i);  // (U^{-1})^T
    }
  return g;
}

// Least primitive root mod p^2 (odd p): primitive mod every p-power.
i64 primitive_root_sq(i64 p) {
  const i64 m = p * p;
  const i64 target = m - p;  // phi(p^2)
  for (i64 g = 2; g < m; ++g) {
    if (g % p == 0) continue;
    i64 x = g % m, ord = 1;
    while (x != 1) { x = (x * g) % m; ++ord; }
    if (ord == target) return g;
  }
  throw std::logic_error("no primitive root found");
}

}  // namespace

GammaGenSet gamma_generators(const PrimeContext& ctx) {
  GammaGenSet out;
  const int n = ctx.n;

  // Transvections over the elementary symmetric matrices.
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Mat S(n);
      S.at(i, j) = 1;
      S.at(j, i) = 1;
      out.mats.push_back(transvection(ctx, S, true));
      out.mats.push_back(transvection(ctx, S, false));
    }

  // GL_n(Z) block embeddings: sign flip, transpositions, elementary adds.
  {
    Mat U = Mat::identity(n);
    U.at(0, 0) = -1;
    out.mats.push_back(gl_embed(ctx, U, U));  // own inverse
  }
  for (int i = 0; i + 1 < n; ++i) {
    Mat U = Mat::identity(n);
    U.at(i, i) = 0; U.at(i + 1, i + 1) = 0;
    U.at(i, i + 1) = 1; U.at(i + 1, i) = 1;
    out.mats.push_back(gl_embed(ctx, U, U));  // transposition, own inverse
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Mat U = Mat::identity(n), Ui = Mat::identity(n);
      U.at(i, j) = 1;
      Ui.at(i, j) = -1;
      out.mats.push_back(gl_embed(ctx, U, Ui));
    }

  out.mats.push_back(ctx.J);

  // Similitude dilations diag(I, u I); multipliers generate the unit group
  // modulo every p-power.
  auto dilation = [&](i64 u) {
    Mat g = Mat::identity(ctx.d);
    for (int i = 0; i < n; ++i) g.at(n + i, n + i) = u;
    return g;
  };
  if (ctx.p == 2) {
    out.mats.push_back(dilation(-1));
    out.mats.push_back(dilation(5));
  } else {
    out.mats.push_back(dilation(primitive_root_sq(ctx.p)));
  }

  // Sanity: every generator is an exact similitude with unit multiplier.
  for (const auto& g : out.mats) {
    Similitude s = similitude_of(ctx, g);
    if (s.k != 0)
      throw std::logic_error("generator with non-unit multiplier");
  }
  return out;
}

}  // namespace hk
