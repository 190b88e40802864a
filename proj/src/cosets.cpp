#include "hecke/cosets.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace hk {

namespace {

Vec add_exact(const Vec& x, const Vec& y) {
  Vec r(x.d);
  for (int i = 0; i < x.d; ++i) r[i] = checked_i64(i128(x[i]) + y[i], "vector sum entry");
  return r;
}

// Structural sanity for Hermite labels: upper triangular, p-power pivots with
// exponent sum n*k, above-pivot entries reduced.
bool is_label_of_valuation(const PrimeContext& ctx, const Mat& H, int k) {
  if (H.d != ctx.d) return false;
  int total = 0;
  for (int i = 0; i < H.d; ++i) {
    for (int j = 0; j < i; ++j)
      if (H.at(i, j) != 0) return false;
    i64 piv = H.at(i, i);
    if (piv <= 0) return false;
    int e = vp(piv, ctx.p);
    if (piv != ipow(ctx.p, e)) return false;
    total += e;
    for (int j = i + 1; j < H.d; ++j)
      if (H.at(i, j) < 0 || H.at(i, j) >= piv) return false;
  }
  return total == ctx.n * k;
}

}  // namespace

std::string TildeLeftCoset::str() const {
  return "{k=" + std::to_string(k) + " H=" + H.str() + " v=" + v.str() + "}";
}

// ---------------------------------------------------------------------------
// Canonicalization

CanonFull canonicalize_with(const PrimeContext& ctx, const Mat& C, const Vec& c,
                            const Similitude& sim) {
  if (C.d != ctx.d || c.d != ctx.d)
    throw std::invalid_argument("canonicalize: dimension mismatch");
  const int k = sim.k;
  if (k < 0 || k >= kValInfinity) throw NotInMonoid("multiplier valuation out of range");
  if (2 * k > ctx.emax)
    throw std::overflow_error("canonicalize: valuation " + std::to_string(k) +
                              " needs p^" + std::to_string(2 * k) +
                              " precision, beyond emax=" + std::to_string(ctx.emax));

  // Modular similitude check: C^T J C == mu J  (mod p^emax). Exact
  // representatives pass trivially; reduced representatives are accepted iff
  // their declared multiplier data is consistent.
  const i64 P = ctx.pk(ctx.emax);
  {
    Mat G = mul_mod(C.transpose(), mul_mod(ctx.J, C, P), P);
    const i64 mu_mod = emod(sim.mu, P);
    for (int i = 0; i < ctx.d; ++i)
      for (int j = 0; j < ctx.d; ++j)
        if (G.at(i, j) != emod128(i128(mu_mod) * ctx.J.at(i, j), P))
          throw NotInMonoid("matrix fails the similitude identity for its declared multiplier");
  }

  CanonFull out;
  out.sim = sim;
  out.lc.k = k;
  out.lc.H = hnf_p(ctx, reduce_mod(C, P), ctx.n * k);
  out.lc.v = Vec(ctx.d);
  out.X0 = Mat(ctx.d);

  if (k > 0) {
    // X0 = H C^{-1} = H * Chat / mu with Chat = -J C^T J. Work modulo
    // p^e with e >= 2k: the p^k division then still leaves p^k of precision.
    const int e = std::min(ctx.emax, 2 * k + 2);
    const i64 Pe = ctx.pk(e);
    const i64 pk = ctx.pk(k);
    Mat W = mul_mod(out.lc.H, reduce_mod(j_twist(ctx, C), Pe), Pe);
    const i64 uinv = unit_inv_mod(emod(sim.unit, pk), pk);
    for (int i = 0; i < ctx.d; ++i)
      for (int j = 0; j < ctx.d; ++j) {
        if (W.at(i, j) % pk != 0)
          throw NotInMonoid("label transform H*C^{-1} is not integral");
        out.X0.at(i, j) = emod128(i128(W.at(i, j) / pk) * uinv, pk);
      }
    out.lc.v = mul_mod(out.X0, c, pk);
  }
  return out;
}

CanonFull canonicalize_full(const PrimeContext& ctx, const Mat& C, const Vec& c) {
  Similitude s;
  try {
    s = similitude_of(ctx, C);
  } catch (const NotSimilitude& err) {
    throw NotInMonoid(err.what());
  }
  return canonicalize_with(ctx, C, c, s);
}

TildeLeftCoset canonicalize(const PrimeContext& ctx, const Mat& C, const Vec& c) {
  return canonicalize_full(ctx, C, c).lc;
}

TildeLeftCoset mul_rep(const PrimeContext& ctx, const Mat& C, const Vec& c, const Mat& D,
                       const Vec& d) {
  Similitude sD;
  try {
    sD = similitude_of(ctx, D);
  } catch (const NotSimilitude& err) {
    throw NotInMonoid(err.what());
  }
  // (C,c)(D,d) = (CD, Cd + mu(D) c)
  return canonicalize(ctx, mul(C, D), add_exact(mul(C, d), scale(c, sD.mu)));
}

Mat label_scaled_inverse(const PrimeContext& ctx, const Mat& H, int k) {
  return scaled_inverse_triangular(ctx, H, ctx.n * k);
}

Mat label_right_mul(const PrimeContext& ctx, const Mat& H, const Mat& g, int k) {
  return hnf_p(ctx, mul(H, g), ctx.n * k);
}

// ---------------------------------------------------------------------------
// Orbits

i64 OrbitCells::cell_count() const {
  i64 c = 0;
  for (const auto& part : parts) c += i64(part.offsets.size());
  return c;
}

i64 OrbitCells::coset_count(const PrimeContext& ctx) const {
  // Every translation-orbit cell contains exactly p^{n k} left cosets: the
  // cell lattice H M + p^k M has index p^{n k} in M / p^k M because the
  // elementary divisor exponents of H pair up to k.
  return checked_i64(i128(cell_count()) * ctx.pk(ctx.n * k), "orbit coset count");
}

bool OrbitCells::contains(const PrimeContext& ctx, const TildeLeftCoset& lc) const {
  if (lc.k != k) return false;
  for (const auto& part : parts) {
    if (part.H != lc.H) continue;
    Vec red = lattice_reduce(ctx, part.HM, reduce_mod(lc.v, ctx.pk(k)));
    for (const auto& off : part.offsets)
      if (off == red) return true;
    return false;
  }
  return false;
}

OrbitCells right_orbit(const PrimeContext& ctx, const GammaGenSet& gens,
                       const std::vector<TildeLeftCoset>& seeds, i64 cell_budget) {
  if (seeds.empty()) throw std::invalid_argument("right_orbit: no seeds");
  const int k = seeds[0].k;
  const int nk = ctx.n * k;
  const i64 pk = ctx.pk(k);
  const i64 pnk = ctx.pk(nk);

  OrbitCells orb;
  orb.k = k;

  std::unordered_map<Mat, int, MatHash> part_index;
  std::vector<std::unordered_set<Vec, VecHash>> seen;
  struct Transition {
    int dst;
    Mat T;  // offset transport, reduced mod p^k
  };
  std::vector<std::vector<Transition>> trans;  // filled lazily per part
  std::deque<std::pair<int, int>> queue;       // (part, offset index)
  i64 cells = 0;

  auto add_part = [&](const Mat& H) -> int {
    auto it = part_index.find(H);
    if (it != part_index.end()) return it->second;
    int idx = int(orb.parts.size());
    part_index.emplace(H, idx);
    OrbitPart part;
    part.H = H;
    part.HM = lattice_columns(ctx, k, H);
    orb.parts.push_back(std::move(part));
    seen.emplace_back();
    trans.emplace_back();
    return idx;
  };

  auto add_cell = [&](int pi, const Vec& v) {
    Vec red = lattice_reduce(ctx, orb.parts[size_t(pi)].HM, v);
    if (!seen[size_t(pi)].insert(red).second) return;
    if (++cells > cell_budget)
      throw BudgetExceeded("right_orbit: more than " + std::to_string(cell_budget) +
                           " translation-orbit cells");
    orb.parts[size_t(pi)].offsets.push_back(red);
    queue.emplace_back(pi, int(orb.parts[size_t(pi)].offsets.size()) - 1);
  };

  for (const auto& s : seeds) {
    if (s.k != k) throw std::invalid_argument("right_orbit: seeds of mixed valuation");
    if (!is_label_of_valuation(ctx, s.H, k))
      throw std::invalid_argument("right_orbit: seed matrix is not a canonical label: " +
                                  s.H.str());
    add_cell(add_part(s.H), reduce_mod(s.v, pk));
  }

  // Right multiplication by a unit-similitude generator g sends the coset
  // labeled (H, v) to (H', T v) with H' = hnf(H g) and T = H' ghat H^{-1}; T
  // carries the cell lattice H M onto H' M, so cells map to cells and one
  // transition per (part, generator) drives the whole BFS. Translations act
  // within cells and need no transitions of their own.
  auto ensure_transitions = [&](int pi) {
    if (!trans[size_t(pi)].empty() || gens.mats.empty()) return;
    const Mat H = orb.parts[size_t(pi)].H;  // copy: parts may reallocate
    Mat Z = scaled_inverse_triangular(ctx, H, nk);
    trans[size_t(pi)].reserve(gens.mats.size());
    for (const Mat& g : gens.mats) {
      Mat Hp = hnf_p(ctx, mul(H, g), nk);
      int dst = add_part(Hp);
      Mat T = mul_div_mod(mul(Hp, j_twist(ctx, g)), Z, pnk, pk);
      trans[size_t(pi)].push_back({dst, T});
    }
  };

  while (!queue.empty()) {
    auto [pi, oi] = queue.front();
    queue.pop_front();
    ensure_transitions(pi);
    for (const auto& tr : trans[size_t(pi)]) {
      Vec img = mul_mod(tr.T, orb.parts[size_t(pi)].offsets[size_t(oi)], pk);
      add_cell(tr.dst, img);
    }
  }
  return orb;
}

// ---------------------------------------------------------------------------
// Double coset labels

bool DoubleCosetLabel::operator<(const DoubleCosetLabel& o) const {
  if (k != o.k) return k < o.k;
  if (divisors != o.divisors) return divisors < o.divisors;
  if (Hmin != o.Hmin) return Hmin < o.Hmin;
  return vmin < o.vmin;
}

std::string DoubleCosetLabel::str() const {
  std::string s = "{k=" + std::to_string(k) + " f=[";
  for (size_t i = 0; i < divisors.size(); ++i)
    s += (i ? "," : "") + std::to_string(divisors[i]);
  return s + "] Hmin=" + Hmin.str() + " vmin=" + vmin.str() + "}";
}

DoubleCosetLabel orbit_label(const PrimeContext& ctx, const OrbitCells& orbit) {
  if (orbit.parts.empty()) throw std::invalid_argument("orbit_label: empty orbit");
  DoubleCosetLabel L;
  L.k = orbit.k;
  L.divisors = smith_exponents(ctx, orbit.parts[0].H, ctx.n * orbit.k);
  size_t best = 0;
  for (size_t i = 1; i < orbit.parts.size(); ++i)
    if (orbit.parts[i].H < orbit.parts[best].H) best = i;
  L.Hmin = orbit.parts[best].H;
  L.vmin = orbit.parts[best].offsets.at(0);
  for (const auto& off : orbit.parts[best].offsets)
    if (off < L.vmin) L.vmin = off;
  return L;
}

DoubleCosetLabel double_coset_label(const PrimeContext& ctx, const TildeLeftCoset& lc,
                                    const GammaGenSet& gens, i64 cell_budget) {
  return orbit_label(ctx, right_orbit(ctx, gens, {lc}, cell_budget));
}

// ---------------------------------------------------------------------------
// Matrix coset enumeration

std::vector<Mat> diagonal_seed_matrices(const PrimeContext& ctx, int k) {
  if (k < 0) throw std::invalid_argument("diagonal_seed_matrices: negative valuation");
  std::vector<Mat> out;
  std::vector<int> a(size_t(ctx.n), 0);
  // ascending exponent tuples a_1 <= ... <= a_n with 2 a_n <= k: one per
  // double coset (the complementary exponents k - a_i fill the dual block)
  auto rec = [&](auto&& self, int pos, int lo) -> void {
    if (pos == ctx.n) {
      Mat m(ctx.d);
      for (int i = 0; i < ctx.n; ++i) {
        m.at(i, i) = ctx.pk(a[size_t(i)]);
        m.at(ctx.n + i, ctx.n + i) = ctx.pk(k - a[size_t(i)]);
      }
      out.push_back(m);
      return;
    }
    for (int v = lo; 2 * v <= k; ++v) {
      a[size_t(pos)] = v;
      self(self, pos + 1, v);
    }
  };
  rec(rec, 0, 0);
  return out;
}

namespace {

bool read_mat_rows(const PrimeContext& ctx, const nlohmann::json& rows, std::vector<Mat>* out) {
  if (!rows.is_array()) return false;
  for (const auto& row : rows) {
    if (!row.is_array() || int(row.size()) != ctx.d * ctx.d) return false;
    Mat m(ctx.d);
    for (int i = 0; i < ctx.d * ctx.d; ++i) {
      if (!row[size_t(i)].is_number_integer()) return false;
      m.a[size_t(i)] = row[size_t(i)].get<i64>();
    }
    out->push_back(m);
  }
  return true;
}

nlohmann::json write_mat_rows(const PrimeContext& ctx, const std::vector<Mat>& mats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const Mat& m : mats) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < ctx.d * ctx.d; ++i) row.push_back(m.a[size_t(i)]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

CosetRepList enumerate_matrix_cosets_full(const PrimeContext& ctx, int k, const GammaGenSet& gens,
                                          i64 budget, const CacheIO* cache) {
  CacheKey key;
  key.p = ctx.p;
  key.n = ctx.n;
  key.k = k;
  key.label = "matrix_cosets_full";
  key.gens_version = gens.version;

  if (cache && cache->enabled()) {
    if (auto payload = cache->load(key)) {
      CosetRepList out;
      bool ok = payload->is_object() && payload->contains("mats") && payload->contains("reps") &&
                payload->contains("units") && (*payload)["units"].is_array();
      ok = ok && read_mat_rows(ctx, (*payload)["mats"], &out.labels);
      ok = ok && read_mat_rows(ctx, (*payload)["reps"], &out.reps);
      if (ok) {
        for (const auto& u : (*payload)["units"]) {
          if (!u.is_number_integer()) { ok = false; break; }
          out.units.push_back(u.get<i64>());
        }
      }
      ok = ok && out.labels.size() == out.reps.size() && out.labels.size() == out.units.size();
      if (ok) return out;
    }
  }

  const int nk = ctx.n * k;
  const i64 Pe = ctx.pk(ctx.emax);
  const i64 Pu = ctx.pk(ctx.emax - k);
  std::vector<i64> gen_units;
  gen_units.reserve(gens.mats.size());
  for (const Mat& g : gens.mats) gen_units.push_back(similitude_of(ctx, g).unit);

  struct Node {
    Mat H;
    Mat R;
    i64 unit;
  };
  std::unordered_map<Mat, int, MatHash> seen;
  std::vector<Node> nodes;
  std::deque<int> queue;
  auto push = [&](const Mat& H, const Mat& R, i64 unit) {
    auto [it, fresh] = seen.emplace(H, int(nodes.size()));
    if (!fresh) return;
    if (i64(nodes.size()) + 1 > budget)
      throw BudgetExceeded("enumerate_matrix_cosets: more than " + std::to_string(budget) +
                           " cosets");
    nodes.push_back({H, R, unit});
    queue.push_back(it->second);
  };
  for (const Mat& s : diagonal_seed_matrices(ctx, k)) push(hnf_p(ctx, s, nk), reduce_mod(s, Pe), 1);
  while (!queue.empty()) {
    Node cur = nodes[size_t(queue.front())];
    queue.pop_front();
    for (size_t gi = 0; gi < gens.mats.size(); ++gi) {
      const Mat& g = gens.mats[gi];
      push(label_right_mul(ctx, cur.H, g, k), mul_mod(cur.R, g, Pe),
           emod128(i128(cur.unit) * gen_units[gi], Pu));
    }
  }
  std::vector<int> order(nodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return nodes[size_t(a)].H < nodes[size_t(b)].H; });
  CosetRepList out;
  out.labels.reserve(nodes.size());
  out.reps.reserve(nodes.size());
  out.units.reserve(nodes.size());
  for (int i : order) {
    out.labels.push_back(nodes[size_t(i)].H);
    out.reps.push_back(nodes[size_t(i)].R);
    out.units.push_back(nodes[size_t(i)].unit);
  }

  if (cache && cache->enabled()) {
    cache->store(key, nlohmann::json{{"mats", write_mat_rows(ctx, out.labels)},
                                     {"reps", write_mat_rows(ctx, out.reps)},
                                     {"units", out.units}});
  }
  return out;
}

std::vector<Mat> enumerate_matrix_cosets(const PrimeContext& ctx, int k, const GammaGenSet& gens,
                                         i64 budget, const CacheIO* cache) {
  return enumerate_matrix_cosets_full(ctx, k, gens, budget, cache).labels;
}

// ---------------------------------------------------------------------------
// Genus-2 representative lists

Mat c_alpha_beta_k(const PrimeContext& ctx, int alpha, int beta, int k) {
  if (ctx.n != 2) throw CaseOutOfRange("c_alpha_beta_k: genus 2 only");
  return Mat::diag({ctx.pk(alpha), ctx.pk(beta), ctx.pk(k - alpha), ctx.pk(k - beta)});
}

namespace {

struct RepEntry {
  Mat m;
  int fam;                  // 1-based index of the matrix family
  std::array<i64, 3> par;   // family parameters, unused slots zero
};

// Lower-unipotent shear fixing the multiplier: the symplectic embedding of
// [[1,0],[-x,1]] acting in coordinates (2nd row, 1st column block).
Mat u_shear(i64 x) {
  return Mat::from_rows(4, {1, 0, 0, 0,   //
                            -x, 1, 0, 0,  //
                            0, 0, 1, x,   //
                            0, 0, 0, 1});
}

std::vector<RepEntry> build_family_A(const PrimeContext& ctx) {
  const i64 p = ctx.p;
  std::vector<RepEntry> out;
  out.push_back({Mat::diag({p, p, 1, 1}), 1, {}});
  for (i64 dpar = 0; dpar < p; ++dpar)
    for (i64 x = 0; x < p; ++x)
      out.push_back({Mat::from_rows(4, {p, 0, 0, 0,     //
                                        -x, 1, 0, dpar, //
                                        0, 0, 1, x,     //
                                        0, 0, 0, p}),
                     2,
                     {dpar, x, 0}});
  for (i64 a = 0; a < p; ++a)
    for (i64 b = 0; b < p; ++b)
      for (i64 dpar = 0; dpar < p; ++dpar)
        out.push_back({Mat::from_rows(4, {1, 0, a, b,  //
                                          0, 1, b, dpar,
                                          0, 0, p, 0,  //
                                          0, 0, 0, p}),
                       3,
                       {a, b, dpar}});
  for (i64 dpar = 0; dpar < p; ++dpar)
    out.push_back({Mat::from_rows(4, {1, 0, dpar, 0,  //
                                      0, p, 0, 0,     //
                                      0, 0, p, 0,     //
                                      0, 0, 0, 1}),
                   4,
                   {dpar, 0, 0}});
  return out;
}

std::vector<RepEntry> build_family_B(const PrimeContext& ctx) {
  const i64 p = ctx.p;
  const i64 p2 = p * p;
  std::vector<RepEntry> out;
  for (i64 x = 0; x < p; ++x)
    out.push_back({mul(Mat::diag({p2, p, 1, p}), u_shear(x)), 1, {x, 0, 0}});
  out.push_back({Mat::diag({p, p2, p, 1}), 2, {}});
  for (i64 a = 0; a < p; ++a)
    for (i64 b = 0; b < p; ++b)
      for (i64 dpar = 0; dpar < p; ++dpar) {
        bool nonzero = (a | b | dpar) != 0;
        if (!nonzero || emod(a * dpar - b * b, p) != 0) continue;  // mod-p rank exactly 1
        out.push_back({Mat::from_rows(4, {p, 0, a, b,  //
                                          0, p, b, dpar,
                                          0, 0, p, 0,  //
                                          0, 0, 0, p}),
                       3,
                       {a, b, dpar}});
      }
  for (i64 b = 0; b < p; ++b)
    for (i64 dpar = 0; dpar < p2; ++dpar)
      for (i64 x = 0; x < p; ++x)
        out.push_back({mul(Mat::from_rows(4, {p, 0, 0, p * b,  //
                                              0, 1, b, dpar,   //
                                              0, 0, p, 0,      //
                                              0, 0, 0, p2}),
                           u_shear(x)),
                       4,
                       {b, dpar, x}});
  for (i64 a = 0; a < p2; ++a)
    for (i64 b = 0; b < p; ++b)
      out.push_back({Mat::from_rows(4, {1, 0, a, b,      //
                                        0, p, p * b, 0,  //
                                        0, 0, p2, 0,     //
                                        0, 0, 0, p}),
                     5,
                     {a, b, 0}});
  return out;
}

std::vector<Mat> strip(const std::vector<RepEntry>& entries) {
  std::vector<Mat> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.m);
  return out;
}

}  // namespace

std::vector<Mat> rep_list_ggAg(const PrimeContext& ctx) {
  if (ctx.n != 2) throw CaseOutOfRange("rep_list_ggAg: genus 2 only");
  return strip(build_family_A(ctx));
}

std::vector<Mat> rep_list_ggBg(const PrimeContext& ctx) {
  if (ctx.n != 2) throw CaseOutOfRange("rep_list_ggBg: genus 2 only");
  return strip(build_family_B(ctx));
}

std::vector<Mat> filtered_rep_list(const PrimeContext& ctx, RepFamily family, int alpha, int beta,
                                   int k) {
  if (ctx.n != 2) throw CaseOutOfRange("filtered_rep_list: genus 2 only");
  if (!(0 <= alpha && alpha <= beta && beta <= k - beta))
    throw CaseOutOfRange("filtered_rep_list: need 0 <= alpha <= beta <= k - beta");
  if (family == RepFamily::A && k < 1)
    throw CaseOutOfRange("filtered_rep_list: multiplier-p family needs k >= 1");
  if (family == RepFamily::B && k < 3)
    throw CaseOutOfRange("filtered_rep_list: divisor-(0,1,1,2) family needs k >= 3");

  auto entries = family == RepFamily::A ? build_family_A(ctx) : build_family_B(ctx);
  auto keep = [&](const RepEntry& e) -> bool {
    if (family == RepFamily::A) {
      if (alpha >= 1) return true;
      if (beta == 0) return e.fam == 1;
      return e.fam == 1 || (e.fam == 2 && e.par[1] == 0);
    }
    if (alpha == 0 && beta == 0) return false;
    if (alpha == 0) return e.fam == 1 && e.par[0] == 0;
    if (alpha == 1 && beta == 1) return e.fam <= 3;
    if (alpha == 1) return e.fam <= 3 || (e.fam == 4 && e.par[2] == 0);
    return true;
  };
  std::vector<Mat> out;
  for (const auto& e : entries)
    if (keep(e)) out.push_back(e.m);
  return out;
}

}  // namespace hk
