#include "hecke/element.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>

#include "hecke/padic.hpp"
#include "hecke/parallel.hpp"

namespace hk {

namespace {

Rat rat_ppow(const PrimeContext& ctx, int e) {
  return e >= 0 ? Rat(ipow(ctx.p, e)) : Rat(1, ipow(ctx.p, -e));
}

Vec vec_sub_mod(const Vec& x, const Vec& y, i64 m) {
  Vec r(x.d);
  for (int i = 0; i < x.d; ++i) r[i] = emod(x[i] - y[i], m);
  return r;
}

// The part's cell-resolution lattice H·M + p^k·M.
Lattice column_lattice(const PrimeContext& ctx, int k, const Mat& H) {
  return lattice_columns(ctx, k, H);
}

bool lattice_subset(const PrimeContext& ctx, const Lattice& a, const Lattice& b) {
  for (int i = 0; i < ctx.d; ++i) {
    Vec row(ctx.d);
    for (int c = 0; c < ctx.d; ++c) row[c] = a.basis.at(i, c);
    if (!lattice_contains(ctx, b, row)) return false;
  }
  return true;
}

bool cell_order(const VectorCell& a, const VectorCell& b) {
  if (a.L.basis != b.L.basis) return a.L.basis < b.L.basis;
  return a.v < b.v;
}

// Generators of the image of `src` (ambient k_src, lifted to ambient K) under
// the integer matrix T, reduced mod p^K. The lift of the mod-p^{k_src} group
// is span(basis) + p^{k_src}·Z^d, so the p^{k_src}-rows are included unless
// the caller knows T kills them mod p^K.
void append_image_gens(const PrimeContext& ctx, const Mat& T, const Lattice& src, int K,
                       bool include_ambient_rows, std::vector<Vec>* out) {
  const i64 PK = ctx.pk(K);
  for (int i = 0; i < ctx.d; ++i) {
    Vec row(ctx.d);
    for (int c = 0; c < ctx.d; ++c) row[c] = src.basis.at(i, c);
    out->push_back(mul_mod(T, row, PK));
  }
  if (include_ambient_rows && src.k < K) {
    const i64 s = ctx.pk(src.k);
    for (int j = 0; j < ctx.d; ++j) {
      Vec e(ctx.d);
      e[j] = s;
      out->push_back(mul_mod(T, e, PK));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// HeckeElement basics

int HeckeElement::find_part(const Mat& H) const {
  auto it = index_.find(H);
  return it == index_.end() ? -1 : it->second;
}

ElemPart& HeckeElement::touch_part(const Mat& H, const Mat& R, i64 unit) {
  auto [it, fresh] = index_.emplace(H, int(parts.size()));
  if (fresh) parts.push_back(ElemPart{H, R, unit, {}});
  return parts[size_t(it->second)];
}

void HeckeElement::add_cell(const PrimeContext& ctx, ElemPart& part, Vec v, const Lattice& L,
                            const Rat& c) {
  if (c.is_zero()) return;
  v = lattice_reduce(ctx, L, reduce_mod(v, ctx.pk(k)));
  for (VectorCell& cell : part.cells) {
    if (cell.L == L && cell.v == v) {
      cell.c += c;
      return;
    }
  }
  part.cells.push_back(VectorCell{v, L, c});
}

void HeckeElement::consolidate() {
  for (ElemPart& part : parts) {
    part.cells.erase(std::remove_if(part.cells.begin(), part.cells.end(),
                                    [](const VectorCell& c) { return c.c.is_zero(); }),
                     part.cells.end());
    std::sort(part.cells.begin(), part.cells.end(), cell_order);
  }
  parts.erase(std::remove_if(parts.begin(), parts.end(),
                             [](const ElemPart& p) { return p.cells.empty(); }),
              parts.end());
  std::sort(parts.begin(), parts.end(),
            [](const ElemPart& a, const ElemPart& b) { return a.H < b.H; });
  index_.clear();
  for (size_t i = 0; i < parts.size(); ++i) index_.emplace(parts[i].H, int(i));
}

Rat HeckeElement::value_at(const PrimeContext& ctx, const TildeLeftCoset& lc) const {
  if (lc.k != k) return Rat(0);
  int pi = find_part(lc.H);
  if (pi < 0) return Rat(0);
  Rat total(0);
  const i64 P = ctx.pk(k);
  for (const VectorCell& cell : parts[size_t(pi)].cells)
    if (lattice_contains(ctx, cell.L, vec_sub_mod(reduce_mod(lc.v, P), cell.v, P))) total += cell.c;
  return total;
}

// ---------------------------------------------------------------------------
// MatrixElement basics

int MatrixElement::find_part(const Mat& H) const {
  auto it = index_.find(H);
  return it == index_.end() ? -1 : it->second;
}

void MatrixElement::add_part(const Mat& H, const Mat& R, i64 unit, const Rat& c) {
  auto [it, fresh] = index_.emplace(H, int(parts.size()));
  if (fresh) {
    parts.push_back(MatrixPart{H, R, unit, c});
    return;
  }
  parts[size_t(it->second)].c += c;
}

void MatrixElement::consolidate() {
  parts.erase(std::remove_if(parts.begin(), parts.end(),
                             [](const MatrixPart& p) { return p.c.is_zero(); }),
              parts.end());
  std::sort(parts.begin(), parts.end(),
            [](const MatrixPart& a, const MatrixPart& b) { return a.H < b.H; });
  index_.clear();
  for (size_t i = 0; i < parts.size(); ++i) index_.emplace(parts[i].H, int(i));
}

// ---------------------------------------------------------------------------
// Matrix-ring constructors and operations

MatrixElement mx_zero(int k) {
  MatrixElement m;
  m.k = k;
  return m;
}

MatrixElement mx_identity(const PrimeContext& ctx) {
  MatrixElement m;
  m.k = 0;
  m.add_part(Mat::identity(ctx.d), Mat::identity(ctx.d), 1, Rat(1));
  return m;
}

MatrixElement mx_scalar(const PrimeContext& ctx, int m) {
  if (m < 0) throw std::invalid_argument("mx_scalar: negative exponent");
  MatrixElement r;
  r.k = 2 * m;
  Mat A = Mat::identity(ctx.d);
  for (int i = 0; i < ctx.d; ++i) A.at(i, i) = ctx.pk(m);
  r.add_part(A, A, 1, Rat(1));
  return r;
}

MatrixElement matrix_double_coset(const PrimeContext& ctx, const Mat& A, const GammaGenSet& gens,
                                  i64 budget) {
  Similitude sim = similitude_of(ctx, A);
  const int k = sim.k;
  const i64 Pe = ctx.pk(ctx.emax);
  const i64 Pu = ctx.pk(ctx.emax - k);
  std::vector<i64> gen_units;
  for (const Mat& g : gens.mats) gen_units.push_back(similitude_of(ctx, g).unit);

  MatrixElement out;
  out.k = k;
  struct Node {
    Mat H, R;
    i64 unit;
  };
  std::unordered_map<Mat, int, MatHash> seen;
  std::vector<Node> nodes;
  std::deque<int> queue;
  auto push = [&](const Mat& H, const Mat& R, i64 unit) {
    auto [it, fresh] = seen.emplace(H, int(nodes.size()));
    if (!fresh) return;
    if (i64(nodes.size()) + 1 > budget)
      throw BudgetExceeded("matrix_double_coset: budget exceeded");
    nodes.push_back({H, R, unit});
    queue.push_back(it->second);
  };
  push(hnf_p(ctx, A, ctx.n * k), reduce_mod(A, Pe), emod(sim.unit, Pu));
  while (!queue.empty()) {
    Node cur = nodes[size_t(queue.front())];
    queue.pop_front();
    for (size_t gi = 0; gi < gens.mats.size(); ++gi)
      push(label_right_mul(ctx, cur.H, gens.mats[gi], k), mul_mod(cur.R, gens.mats[gi], Pe),
           emod128(i128(cur.unit) * gen_units[gi], Pu));
  }
  for (const Node& nd : nodes) out.add_part(nd.H, nd.R, nd.unit, Rat(1));
  out.consolidate();
  return out;
}

MatrixElement matrix_full_level(const PrimeContext& ctx, int k, const GammaGenSet& gens,
                                i64 budget, const CacheIO* cache) {
  CosetRepList list = enumerate_matrix_cosets_full(ctx, k, gens, budget, cache);
  MatrixElement out;
  out.k = k;
  for (size_t i = 0; i < list.labels.size(); ++i)
    out.add_part(list.labels[i], list.reps[i], list.units[i], Rat(1));
  out.consolidate();
  return out;
}

MatrixElement matrix_mul(const PrimeContext& ctx, const MatrixElement& a, const MatrixElement& b) {
  if (a.empty() || b.empty()) return mx_zero(a.k + b.k);
  const int K = a.k + b.k;
  const int nK = ctx.n * K;
  if (nK + 2 > ctx.emax)
    throw std::overflow_error("matrix_mul: valuation " + std::to_string(K) +
                              " exceeds working precision");
  const i64 Pe = ctx.pk(ctx.emax);
  const i64 Pu = ctx.pk(ctx.emax - K);
  MatrixElement out;
  out.k = K;
  for (const MatrixPart& pa : a.parts)
    for (const MatrixPart& pb : b.parts) {
      Mat R = mul_mod(pa.R, pb.R, Pe);
      out.add_part(hnf_p(ctx, R, nK), R, emod128(i128(pa.unit) * pb.unit, Pu), pa.c * pb.c);
    }
  out.consolidate();
  return out;
}

MatrixElement matrix_add(const MatrixElement& a, const MatrixElement& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.k != b.k) throw std::invalid_argument("matrix_add: mixed valuations");
  MatrixElement out = a;
  for (const MatrixPart& pb : b.parts) out.add_part(pb.H, pb.R, pb.unit, pb.c);
  out.consolidate();
  return out;
}

MatrixElement matrix_scale(const Rat& r, const MatrixElement& a) {
  MatrixElement out = a;
  for (MatrixPart& p : out.parts) p.c *= r;
  out.consolidate();
  return out;
}

bool matrix_equal(const MatrixElement& a, const MatrixElement& b) {
  MatrixElement ca = a, cb = b;
  ca.consolidate();
  cb.consolidate();
  if (ca.parts.empty() && cb.parts.empty()) return true;
  if (ca.k != cb.k || ca.parts.size() != cb.parts.size()) return false;
  for (size_t i = 0; i < ca.parts.size(); ++i)
    if (ca.parts[i].H != cb.parts[i].H || ca.parts[i].c != cb.parts[i].c) return false;
  return true;
}

Rat deg(const MatrixElement& a) {
  Rat total(0);
  for (const MatrixPart& p : a.parts) total += p.c;
  return total;
}

// ---------------------------------------------------------------------------
// Extended-ring constructors

HeckeElement he_zero(int k) {
  HeckeElement x;
  x.k = k;
  x.invariant_claimed = true;
  return x;
}

HeckeElement he_identity(const PrimeContext& ctx) {
  return s_embed(ctx, mx_identity(ctx));
}

HeckeElement s_embed(const PrimeContext& ctx, const MatrixElement& a) {
  HeckeElement x;
  x.k = a.k;
  for (const MatrixPart& p : a.parts) {
    ElemPart& part = x.touch_part(p.H, p.R, p.unit);
    x.add_cell(ctx, part, Vec(ctx.d), column_lattice(ctx, a.k, p.H), p.c);
  }
  x.invariant_claimed = true;
  x.consolidate();
  return x;
}

HeckeElement build_Ttilde_p(const PrimeContext& ctx, int k, const GammaGenSet& gens, i64 budget,
                            const CacheIO* cache) {
  CosetRepList list = enumerate_matrix_cosets_full(ctx, k, gens, budget, cache);
  HeckeElement x;
  x.k = k;
  Lattice full = lattice_full(ctx, k);
  for (size_t i = 0; i < list.labels.size(); ++i) {
    ElemPart& part = x.touch_part(list.labels[i], list.reps[i], list.units[i]);
    x.add_cell(ctx, part, Vec(ctx.d), full, Rat(1));
  }
  x.invariant_claimed = true;
  x.consolidate();
  return x;
}

namespace {

// Orbit closure at cell-block resolution: a state (H, v, L) stands for the
// coset block {(H, w) : w ≡ v mod L}, and the right action of a unit
// similitude g sends it to (H', T·v, T·L) with H' = hnf(H·g) and
// T = H'·ĝ·H^{-1} exact. Closing the seed blocks under all generators yields
// the union of the seeds' double cosets as a small set of blocks per part.
struct BlockOrbitPart {
  Mat H;
  Mat R;
  i64 unit = 1;
  Mat Z;  // label_scaled_inverse(H)
  std::vector<std::pair<Vec, Lattice>> states;
};

HeckeElement structured_union_impl(const PrimeContext& ctx,
                                   const std::vector<std::pair<Mat, Vec>>& seeds,
                                   const Mat& translation_cols, const GammaGenSet& gens,
                                   i64 budget) {
  if (seeds.empty()) throw std::invalid_argument("structured union: no seeds");
  const int k = similitude_of(ctx, seeds.front().first).k;
  const int nk = ctx.n * k;
  const i64 P = ctx.pk(k);
  const i64 Pnk = ctx.pk(nk);
  const i64 Pe = ctx.pk(ctx.emax);
  const i64 Pu = ctx.pk(ctx.emax - k);
  std::vector<i64> gen_units;
  for (const Mat& g : gens.mats) gen_units.push_back(similitude_of(ctx, g).unit);

  std::vector<BlockOrbitPart> parts;
  std::unordered_map<Mat, int, MatHash> part_index;
  std::deque<std::pair<int, int>> queue;  // (part, state)
  i64 state_count = 0;

  auto push = [&](const Mat& H, const Mat& R, i64 unit, const Vec& v, const Lattice& L) {
    auto [it, fresh] = part_index.emplace(H, int(parts.size()));
    if (fresh) {
      BlockOrbitPart np;
      np.H = H;
      np.R = R;
      np.unit = unit;
      np.Z = label_scaled_inverse(ctx, H, k);
      parts.push_back(std::move(np));
    }
    BlockOrbitPart& part = parts[size_t(it->second)];
    Vec vr = lattice_reduce(ctx, L, v);
    for (const auto& st : part.states)
      if (st.first == vr && st.second == L) return;
    if (++state_count > budget) throw BudgetExceeded("structured union: budget exceeded");
    part.states.emplace_back(vr, L);
    queue.emplace_back(it->second, int(part.states.size()) - 1);
  };

  for (const auto& [A, a] : seeds) {
    Similitude sim = similitude_of(ctx, A);
    if (sim.k != k) throw std::invalid_argument("structured union: seeds of mixed valuation");
    CanonFull cf = canonicalize_full(ctx, A, a);
    std::vector<Vec> gens0;
    if (k > 0) {
      Mat XN = mul_mod(cf.X0, reduce_mod(translation_cols, P), P);
      for (int j = 0; j < ctx.d; ++j) {
        Vec col(ctx.d);
        for (int i = 0; i < ctx.d; ++i) col[i] = XN.at(i, j);
        gens0.push_back(col);
      }
      Lattice hm = column_lattice(ctx, k, cf.lc.H);
      for (int i = 0; i < ctx.d; ++i) {
        Vec row(ctx.d);
        for (int c = 0; c < ctx.d; ++c) row[c] = hm.basis.at(i, c);
        gens0.push_back(row);
      }
    }
    push(cf.lc.H, reduce_mod(A, Pe), emod(sim.unit, Pu), cf.lc.v,
         lattice_from_gens(ctx, k, gens0));
  }

  while (!queue.empty()) {
    auto [pi, si] = queue.front();
    queue.pop_front();
    Mat H = parts[size_t(pi)].H;
    Mat R = parts[size_t(pi)].R;
    i64 unit = parts[size_t(pi)].unit;
    Mat Z = parts[size_t(pi)].Z;
    Vec v = parts[size_t(pi)].states[size_t(si)].first;
    Lattice L = parts[size_t(pi)].states[size_t(si)].second;
    for (size_t gi = 0; gi < gens.mats.size(); ++gi) {
      const Mat& g = gens.mats[gi];
      Mat Hp = label_right_mul(ctx, H, g, k);
      Mat T = mul_div_mod(mul(Hp, j_twist(ctx, g)), Z, Pnk, P);
      std::vector<Vec> lgens;
      append_image_gens(ctx, T, L, k, /*include_ambient_rows=*/false, &lgens);
      push(Hp, mul_mod(R, g, Pe), emod128(i128(unit) * gen_units[gi], Pu), mul_mod(T, v, P),
           lattice_from_gens(ctx, k, lgens));
    }
  }

  // Emit each part's block union as cells. Blocks contained in other blocks
  // are dropped; overlap clusters of origin-centered blocks are expanded by
  // inclusion-exclusion; anything else present in one cluster is unsupported
  // (it does not arise from lattice or single-coset seeds).
  HeckeElement out;
  out.k = k;
  for (BlockOrbitPart& part : parts) {
    auto& st = part.states;
    std::vector<bool> dropped(st.size(), false);
    for (size_t i = 0; i < st.size(); ++i)
      for (size_t j = 0; j < st.size() && !dropped[i]; ++j) {
        if (i == j || dropped[j]) continue;
        bool eq = st[i].second == st[j].second;
        if (eq && j > i) continue;  // keep the first of equals
        if ((eq || lattice_subset(ctx, st[i].second, st[j].second)) &&
            lattice_contains(ctx, st[j].second, vec_sub_mod(st[i].first, st[j].first, P)))
          dropped[i] = true;
      }
    std::vector<int> keep;
    for (size_t i = 0; i < st.size(); ++i)
      if (!dropped[i]) keep.push_back(int(i));

    // Overlap clusters among the kept blocks (union-find by pairwise test).
    std::vector<int> root(keep.size());
    for (size_t i = 0; i < keep.size(); ++i) root[i] = int(i);
    std::function<int(int)> find = [&](int i) {
      return root[size_t(i)] == i ? i : root[size_t(i)] = find(root[size_t(i)]);
    };
    for (size_t i = 0; i < keep.size(); ++i)
      for (size_t j = i + 1; j < keep.size(); ++j) {
        const auto& a = st[size_t(keep[i])];
        const auto& b = st[size_t(keep[j])];
        Lattice sum = lattice_sum(ctx, a.second, b.second);
        if (lattice_contains(ctx, sum, vec_sub_mod(a.first, b.first, P)))
          root[size_t(find(int(j)))] = find(int(i));
      }
    std::map<int, std::vector<int>> clusters;
    for (size_t i = 0; i < keep.size(); ++i) clusters[find(int(i))].push_back(keep[i]);

    ElemPart& dst = out.touch_part(part.H, part.R, part.unit);
    for (const auto& [rt, members] : clusters) {
      (void)rt;
      if (members.size() == 1) {
        const auto& s = st[size_t(members[0])];
        out.add_cell(ctx, dst, s.first, s.second, Rat(1));
        continue;
      }
      for (int m : members)
        if (!st[size_t(m)].first.is_zero())
          throw HeckeError("structured union: unsupported overlap pattern at part " +
                           part.H.str());
      if (members.size() > 12)
        throw BudgetExceeded("structured union: overlap cluster too large");
      int J = int(members.size());
      std::vector<Lattice> inter(size_t(1) << J);
      for (int mask = 1; mask < (1 << J); ++mask) {
        int low = mask & -mask;
        int lowi = 0;
        while (!((mask >> lowi) & 1)) ++lowi;
        const Lattice& base = st[size_t(members[size_t(lowi)])].second;
        inter[size_t(mask)] =
            mask == low ? base : lattice_intersect(ctx, inter[size_t(mask ^ low)], base);
        int bits = __builtin_popcount(unsigned(mask));
        out.add_cell(ctx, dst, Vec(ctx.d), inter[size_t(mask)], Rat(bits % 2 == 1 ? 1 : -1));
      }
    }
  }
  out.invariant_claimed = true;
  out.consolidate();
  return out;
}

}  // namespace

HeckeElement tilde_double_coset(const PrimeContext& ctx, const Mat& A, const Vec& a,
                                const GammaGenSet& gens, i64 budget) {
  return structured_union_impl(ctx, {{A, a}}, Mat(ctx.d), gens, budget);
}

HeckeElement build_structured(const PrimeContext& ctx, const std::vector<Mat>& seed_reps,
                              const Mat& translation_cols, const GammaGenSet& gens, i64 budget) {
  std::vector<std::pair<Mat, Vec>> seeds;
  seeds.reserve(seed_reps.size());
  for (const Mat& A : seed_reps) seeds.emplace_back(A, Vec(ctx.d));
  return structured_union_impl(ctx, seeds, translation_cols, gens, budget);
}

// ---------------------------------------------------------------------------
// Linear operations

HeckeElement he_add(const HeckeElement& a, const HeckeElement& b) {
  if (a.empty() && a.k != b.k) {
    HeckeElement out = b;
    out.invariant_claimed = a.invariant_claimed && b.invariant_claimed;
    return out;
  }
  if (b.empty() && a.k != b.k) {
    HeckeElement out = a;
    out.invariant_claimed = a.invariant_claimed && b.invariant_claimed;
    return out;
  }
  if (a.k != b.k) throw std::invalid_argument("he_add: mixed valuations");
  HeckeElement out = a;
  for (const ElemPart& part : b.parts) {
    ElemPart& dst = out.touch_part(part.H, part.R, part.unit);
    for (const VectorCell& cell : part.cells) dst.cells.push_back(cell);
  }
  // Merge duplicate (v, L) cells part by part.
  for (ElemPart& part : out.parts) {
    std::sort(part.cells.begin(), part.cells.end(), cell_order);
    std::vector<VectorCell> merged;
    for (const VectorCell& cell : part.cells) {
      if (!merged.empty() && merged.back().L == cell.L && merged.back().v == cell.v)
        merged.back().c += cell.c;
      else
        merged.push_back(cell);
    }
    part.cells = std::move(merged);
  }
  out.invariant_claimed = a.invariant_claimed && b.invariant_claimed;
  out.consolidate();
  return out;
}

HeckeElement he_scale(const Rat& r, const HeckeElement& a) {
  HeckeElement out = a;
  for (ElemPart& part : out.parts)
    for (VectorCell& cell : part.cells) cell.c *= r;
  out.consolidate();
  return out;
}

// ---------------------------------------------------------------------------
// Equality

bool equal(const PrimeContext& ctx, const HeckeElement& a, const HeckeElement& b,
           i64 class_budget) {
  if (a.k != b.k)
    // Only the zero function lives at every valuation.
    return equal(ctx, a, he_zero(a.k), class_budget) &&
           equal(ctx, b, he_zero(b.k), class_budget);

  const i64 P = ctx.pk(a.k);
  std::unordered_map<Mat, int, MatHash> seen;
  std::vector<std::pair<const ElemPart*, const ElemPart*>> matched;
  for (const ElemPart& p : a.parts) {
    seen.emplace(p.H, int(matched.size()));
    matched.emplace_back(&p, nullptr);
  }
  for (const ElemPart& p : b.parts) {
    auto it = seen.find(p.H);
    if (it == seen.end())
      matched.emplace_back(nullptr, &p);
    else
      matched[size_t(it->second)].second = &p;
  }

  i64 classes_used = 0;
  for (const auto& [pa, pb] : matched) {
    // Signed cell list for (a - b) on this part.
    std::vector<VectorCell> cells;
    if (pa)
      for (const VectorCell& c : pa->cells) cells.push_back(c);
    if (pb)
      for (const VectorCell& c : pb->cells) cells.push_back(VectorCell{c.v, c.L, -c.c});

    // Fast path: identical consolidated lists cancel exactly.
    std::sort(cells.begin(), cells.end(), cell_order);
    std::vector<VectorCell> merged;
    for (const VectorCell& cell : cells) {
      if (!merged.empty() && merged.back().L == cell.L && merged.back().v == cell.v)
        merged.back().c += cell.c;
      else
        merged.push_back(cell);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const VectorCell& c) { return c.c.is_zero(); }),
                 merged.end());
    if (merged.empty()) continue;

    // Refine to the common intersection lattice and compare class sums.
    Lattice common = merged.front().L;
    for (size_t i = 1; i < merged.size(); ++i)
      common = lattice_intersect(ctx, common, merged[i].L);
    std::unordered_map<Vec, Rat, VecHash> values;
    for (const VectorCell& cell : merged) {
      std::vector<Vec> reps = lattice_quotient_reps(ctx, cell.L, common);
      classes_used += i64(reps.size());
      if (classes_used > class_budget) throw BudgetExceeded("equal: refinement too large");
      for (const Vec& t : reps) {
        Vec key = lattice_reduce(ctx, common, add_mod(cell.v, t, P));
        auto [it, fresh] = values.emplace(key, cell.c);
        if (!fresh) it->second += cell.c;
      }
    }
    for (const auto& [key, val] : values) {
      (void)key;
      if (!val.is_zero()) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Product

HeckeElement hecke_mul(const PrimeContext& ctx, const HeckeElement& x, const HeckeElement& y,
                       i64 pair_budget) {
  if (!x.invariant_claimed || !y.invariant_claimed)
    throw InvarianceNotClaimed("hecke_mul: both factors must claim invariance");
  const int K = x.k + y.k;
  if (x.empty() || y.empty()) return he_zero(K);
  const int nK = ctx.n * K;
  if (!valuation_in_range(ctx, K) || K + ctx.n * x.k + 2 > ctx.emax)
    throw std::overflow_error("hecke_mul: valuation " + std::to_string(K) +
                              " exceeds the validated exact range (p=" + std::to_string(ctx.p) +
                              ", emax=" + std::to_string(ctx.emax) + ")");
  const i64 Pe = ctx.pk(ctx.emax);
  const i64 PK = ctx.pk(K);
  const i64 Pu = ctx.pk(ctx.emax - K);
  const i64 Pnx = ctx.pk(ctx.n * x.k);
  const i64 Pny = ctx.pk(ctx.n * y.k);

  // Cell pairs grouped by part pair; budget counts cell pairs.
  i64 pair_count = 0;
  for (const ElemPart& px : x.parts)
    for (const ElemPart& py : y.parts)
      pair_count += i64(px.cells.size()) * i64(py.cells.size());
  if (pair_count > pair_budget)
    throw BudgetExceeded("hecke_mul: " + std::to_string(pair_count) + " cell pairs exceed budget");

  std::vector<Mat> zx;
  zx.reserve(x.parts.size());
  for (const ElemPart& px : x.parts) zx.push_back(label_scaled_inverse(ctx, px.H, x.k));
  std::vector<Mat> zy, yhat;
  zy.reserve(y.parts.size());
  for (const ElemPart& py : y.parts) {
    zy.push_back(label_scaled_inverse(ctx, py.H, y.k));
    yhat.push_back(reduce_mod(j_twist(ctx, py.R), Pe));
  }

  struct Slot {
    Mat Hp, Rp;
    i64 unit = 1;
    std::vector<VectorCell> cells;
  };
  const i64 npairs = i64(x.parts.size()) * i64(y.parts.size());
  std::vector<Slot> slots;
  slots.resize(size_t(npairs));
  parallel_for(npairs, [&](i64 idx) {
    const ElemPart& px = x.parts[size_t(idx / i64(y.parts.size()))];
    const ElemPart& py = y.parts[size_t(idx % i64(y.parts.size()))];
    const Mat& Zx = zx[size_t(idx / i64(y.parts.size()))];
    const Mat& Zy = zy[size_t(idx % i64(y.parts.size()))];
    const Mat& Ryhat = yhat[size_t(idx % i64(y.parts.size()))];
    Slot& slot = slots[size_t(idx)];
    slot.Rp = mul_mod(px.R, py.R, Pe);
    slot.Hp = hnf_p(ctx, slot.Rp, nK);
    slot.unit = emod128(i128(px.unit) * py.unit, Pu);
    Mat M1 = mul_div_mod(slot.Hp, Zy, Pny, PK);
    Mat M2 = mul_div_mod(mul_mod(slot.Hp, Ryhat, Pe), Zx, Pnx, PK);
    for (const VectorCell& cx : px.cells)
      for (const VectorCell& cy : py.cells) {
        std::vector<Vec> lgens;
        // x-side ambient rows map into p^{kx}·M2·M ⊆ p^K·M = 0.
        append_image_gens(ctx, M2, cx.L, K, /*include_ambient_rows=*/false, &lgens);
        append_image_gens(ctx, M1, cy.L, K, /*include_ambient_rows=*/true, &lgens);
        Lattice L = lattice_from_gens(ctx, K, lgens);
        Vec v = add_mod(mul_mod(M1, cy.v, PK), mul_mod(M2, cx.v, PK), PK);
        int e = cx.L.log_size() + cy.L.log_size() - L.log_size();
        Rat coeff = cx.c * cy.c * rat_ppow(ctx, e);
        // Local merge; cross-slot merging happens below. Reduce first.
        v = lattice_reduce(ctx, L, v);
        bool hit = false;
        for (VectorCell& cell : slot.cells)
          if (cell.L == L && cell.v == v) {
            cell.c += coeff;
            hit = true;
            break;
          }
        if (!hit) slot.cells.push_back(VectorCell{v, L, coeff});
      }
  });

  HeckeElement out;
  out.k = K;
  for (const Slot& slot : slots) {
    if (slot.cells.empty()) continue;
    ElemPart& dst = out.touch_part(slot.Hp, slot.Rp, slot.unit);
    for (const VectorCell& cell : slot.cells) out.add_cell(ctx, dst, cell.v, cell.L, cell.c);
  }
  out.invariant_claimed = true;
  out.consolidate();
  return out;
}

Rat hecke_mul_value_at(const PrimeContext& ctx, const HeckeElement& x, const HeckeElement& y,
                       const TildeLeftCoset& target, i64 pair_budget) {
  if (!x.invariant_claimed || !y.invariant_claimed)
    throw InvarianceNotClaimed("hecke_mul_value_at: both factors must claim invariance");
  const int K = x.k + y.k;
  if (target.k != K)
    throw std::invalid_argument("hecke_mul_value_at: target valuation mismatch");
  if (x.empty() || y.empty()) return Rat(0);
  const int nK = ctx.n * K;
  if (!valuation_in_range(ctx, K) || K + ctx.n * x.k + 2 > ctx.emax)
    throw std::overflow_error("hecke_mul_value_at: valuation " + std::to_string(K) +
                              " exceeds the validated exact range (p=" + std::to_string(ctx.p) +
                              ", emax=" + std::to_string(ctx.emax) + ")");
  const i64 Pe = ctx.pk(ctx.emax);
  const i64 PK = ctx.pk(K);
  const i64 Pnx = ctx.pk(ctx.n * x.k);
  const i64 Pny = ctx.pk(ctx.n * y.k);

  const i64 npairs = i64(x.parts.size()) * i64(y.parts.size());
  if (npairs > pair_budget)
    throw BudgetExceeded("hecke_mul_value_at: " + std::to_string(npairs) +
                         " part pairs exceed budget");

  std::vector<Mat> zx;
  zx.reserve(x.parts.size());
  for (const ElemPart& px : x.parts) zx.push_back(label_scaled_inverse(ctx, px.H, x.k));

  std::vector<Rat> contrib(static_cast<size_t>(npairs));
  parallel_for(npairs, [&](i64 idx) {
    const ElemPart& px = x.parts[size_t(idx / i64(y.parts.size()))];
    const ElemPart& py = y.parts[size_t(idx % i64(y.parts.size()))];
    Mat Rp = mul_mod(px.R, py.R, Pe);
    Mat Hp = hnf_p(ctx, Rp, nK);
    if (!(Hp == target.H)) return;
    const Mat& Zx = zx[size_t(idx / i64(y.parts.size()))];
    Mat Zy = label_scaled_inverse(ctx, py.H, y.k);
    Mat Ryhat = reduce_mod(j_twist(ctx, py.R), Pe);
    Mat M1 = mul_div_mod(Hp, Zy, Pny, PK);
    Mat M2 = mul_div_mod(mul_mod(Hp, Ryhat, Pe), Zx, Pnx, PK);
    Rat sum(0);
    for (const VectorCell& cx : px.cells)
      for (const VectorCell& cy : py.cells) {
        std::vector<Vec> lgens;
        append_image_gens(ctx, M2, cx.L, K, /*include_ambient_rows=*/false, &lgens);
        append_image_gens(ctx, M1, cy.L, K, /*include_ambient_rows=*/true, &lgens);
        Lattice L = lattice_from_gens(ctx, K, lgens);
        Vec v = add_mod(mul_mod(M1, cy.v, PK), mul_mod(M2, cx.v, PK), PK);
        if (!lattice_contains(ctx, L, vec_sub_mod(target.v, v, PK))) continue;
        int e = cx.L.log_size() + cy.L.log_size() - L.log_size();
        sum += cx.c * cy.c * rat_ppow(ctx, e);
      }
    contrib[size_t(idx)] = sum;
  });

  Rat total(0);
  for (const Rat& r : contrib) total += r;
  return total;
}

// ---------------------------------------------------------------------------
// Expansion

std::vector<std::pair<TildeLeftCoset, i64>> expand(const PrimeContext& ctx, const HeckeElement& x,
                                                   i64 budget) {
  i128 total = 0;
  for (const ElemPart& part : x.parts)
    for (const VectorCell& cell : part.cells) {
      i128 size = 1;
      for (int i = 0; i < cell.L.log_size(); ++i) {
        size *= ctx.p;
        if (size > budget) break;
      }
      total += size;
      if (total > budget)
        throw BudgetExceeded("expand: more than " + std::to_string(budget) + " cosets");
    }

  const i64 P = ctx.pk(x.k);
  std::vector<std::pair<TildeLeftCoset, i64>> out;
  for (const ElemPart& part : x.parts) {
    std::unordered_map<Vec, Rat, VecHash> values;
    for (const VectorCell& cell : part.cells)
      lattice_for_each(ctx, cell.L, [&](const Vec& t) {
        Vec point = add_mod(cell.v, t, P);
        auto [it, fresh] = values.emplace(point, cell.c);
        if (!fresh) it->second += cell.c;
      });
    std::vector<std::pair<Vec, Rat>> items(values.begin(), values.end());
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [v, c] : items) {
      if (c.is_zero()) continue;
      if (!c.is_integer())
        throw NonIntegral("expand: non-integer multiplicity " + c.str() + " at " +
                          TildeLeftCoset{part.H, v, x.k}.str());
      out.emplace_back(TildeLeftCoset{part.H, v, x.k}, c.num);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.H != b.first.H) return a.first.H < b.first.H;
    return a.first.v < b.first.v;
  });
  return out;
}

// ---------------------------------------------------------------------------
// theta / phi

HeckeElement theta(const PrimeContext& ctx, const HeckeElement& x) {
  HeckeElement out;
  out.k = x.k;
  const i64 P = ctx.pk(x.k);
  for (const ElemPart& part : x.parts) {
    Lattice hm = column_lattice(ctx, x.k, part.H);
    ElemPart& dst = out.touch_part(part.H, part.R, part.unit);
    for (const VectorCell& cell : part.cells) {
      Lattice L2 = lattice_sum(ctx, lattice_scale(ctx, cell.L, 1), hm);
      int e = cell.L.log_size() - L2.log_size();
      out.add_cell(ctx, dst, scale_mod(cell.v, ctx.p, P), L2, cell.c * rat_ppow(ctx, e));
    }
  }
  out.invariant_claimed = x.invariant_claimed;
  out.consolidate();
  return out;
}

HeckeElement theta_pow(const PrimeContext& ctx, const HeckeElement& x, int m) {
  HeckeElement out = x;
  for (int i = 0; i < m; ++i) out = theta(ctx, out);
  return out;
}

HeckeElement theta_certified(const PrimeContext& ctx, const HeckeElement& x, i64 pair_budget) {
  HeckeElement tx = theta(ctx, x);
  HeckeElement sp = s_embed(ctx, mx_scalar(ctx, 1));
  HeckeElement lhs = hecke_mul(ctx, sp, tx, pair_budget);
  HeckeElement rhs = hecke_mul(ctx, x, sp, pair_budget);
  if (!equal(ctx, lhs, rhs, pair_budget))
    throw HeckeError("theta certificate failed: s(<p>)*theta(x) != x*s(<p>)");
  return tx;
}

MatrixElement phi(const PrimeContext& ctx, const HeckeElement& x) {
  HeckeElement stable = theta_pow(ctx, x, x.k);
  MatrixElement out;
  out.k = x.k;
  for (const ElemPart& part : stable.parts) {
    Lattice hm = column_lattice(ctx, x.k, part.H);
    if (part.cells.size() != 1 || !part.cells.front().v.is_zero() ||
        !(part.cells.front().L == hm))
      throw NotInImageOfS("phi: stabilization left a non-embedded part at " + part.H.str());
    out.add_part(part.H, part.R, part.unit, part.cells.front().c);
  }
  out.consolidate();
  return out;
}

// ---------------------------------------------------------------------------
// Degree

Rat deg(const PrimeContext& ctx, const HeckeElement& x) {
  Rat total(0);
  for (const ElemPart& part : x.parts)
    for (const VectorCell& cell : part.cells) total += cell.c * rat_ppow(ctx, cell.L.log_size());
  return total;
}

// ---------------------------------------------------------------------------
// Decomposition into double cosets

namespace {

std::vector<DecomposePiece> decompose_impl(const PrimeContext& ctx, const HeckeElement& x,
                                           const GammaGenSet& gens, i64 budget,
                                           bool require_integral) {
  const i64 P = ctx.pk(x.k);
  // Per part: value map refined to translation-cell (HM) classes.
  struct PartMap {
    const ElemPart* part;
    Lattice hm;
    std::map<Vec, Rat> values;  // ordered for deterministic sweeps
  };
  std::vector<PartMap> maps;
  i64 classes = 0;
  for (const ElemPart& part : x.parts) {
    PartMap pm;
    pm.part = &part;
    pm.hm = column_lattice(ctx, x.k, part.H);
    for (const VectorCell& cell : part.cells) {
      std::vector<Vec> reps = lattice_quotient_reps(ctx, cell.L, pm.hm);
      classes += i64(reps.size());
      if (classes > budget) throw BudgetExceeded("decompose: refinement too large");
      for (const Vec& t : reps) {
        Vec key = lattice_reduce(ctx, pm.hm, add_mod(cell.v, t, P));
        auto [it, fresh] = pm.values.emplace(key, cell.c);
        if (!fresh) it->second += cell.c;
      }
    }
    for (auto it = pm.values.begin(); it != pm.values.end();)
      it = it->second.is_zero() ? pm.values.erase(it) : std::next(it);
    maps.push_back(std::move(pm));
  }
  std::unordered_map<Mat, int, MatHash> part_of;
  for (size_t i = 0; i < maps.size(); ++i) part_of.emplace(maps[i].part->H, int(i));

  std::vector<DecomposePiece> out;
  for (size_t start = 0; start < maps.size(); ++start) {
    while (!maps[start].values.empty()) {
      auto first = maps[start].values.begin();
      TildeLeftCoset seed{maps[start].part->H, first->first, x.k};
      Rat mult = first->second;
      OrbitCells orbit = right_orbit(ctx, gens, {seed}, budget);
      for (const OrbitPart& op : orbit.parts) {
        auto pit = part_of.find(op.H);
        if (pit == part_of.end())
          throw NonConstantMultiplicity("decompose: orbit leaves the support at " + op.H.str());
        PartMap& pm = maps[size_t(pit->second)];
        for (const Vec& off : op.offsets) {
          Vec key = lattice_reduce(ctx, pm.hm, off);
          auto vit = pm.values.find(key);
          if (vit == pm.values.end() || vit->second != mult)
            throw NonConstantMultiplicity("decompose: value not constant on the orbit of " +
                                          seed.str());
          pm.values.erase(vit);
        }
      }
      if (require_integral && !mult.is_integer())
        throw NonIntegral("decompose: non-integer multiplicity " + mult.str());
      DecomposePiece piece;
      piece.label = orbit_label(ctx, orbit);
      piece.mult = mult.is_integer() ? mult.num : 0;
      out.push_back(std::move(piece));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const DecomposePiece& a, const DecomposePiece& b) { return a.label < b.label; });
  return out;
}

}  // namespace

std::vector<DecomposePiece> decompose(const PrimeContext& ctx, const HeckeElement& x,
                                      const GammaGenSet& gens, i64 budget) {
  return decompose_impl(ctx, x, gens, budget, /*require_integral=*/true);
}

bool validate_invariance(const PrimeContext& ctx, const HeckeElement& x, const GammaGenSet& gens,
                         i64 budget) {
  try {
    decompose_impl(ctx, x, gens, budget, /*require_integral=*/false);
    return true;
  } catch (const NonConstantMultiplicity&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Pretty printing

std::string pretty_print(const PrimeContext& ctx, const HeckeElement& x) {
  HeckeElement c = x;
  c.consolidate();
  std::ostringstream os;
  if (c.parts.empty()) return "0";
  // Scalar-coset multiples: single part p^m E with the zero cell.
  if (c.parts.size() == 1 && c.parts[0].cells.size() == 1 && c.k % 2 == 0) {
    const ElemPart& part = c.parts[0];
    const VectorCell& cell = part.cells[0];
    Mat sc = Mat::identity(ctx.d);
    for (int i = 0; i < ctx.d; ++i) sc.at(i, i) = ctx.pk(c.k / 2);
    if (part.H == sc && cell.v.is_zero() && cell.L == column_lattice(ctx, c.k, part.H)) {
      std::string coeff = cell.c == Rat(1) ? "" : cell.c.str() + "*";
      if (c.k == 0) return coeff.empty() ? "1" : cell.c.str();
      if (c.k == 2)
        os << coeff << "⟨p⟩^s";
      else
        os << coeff << "⟨p^" << (c.k / 2) << "⟩^s";
      return os.str();
    }
  }
  // Full-level elements: every part is one full cell with a shared value.
  bool full = true;
  Rat shared = c.parts[0].cells[0].c;
  Lattice fullL = lattice_full(ctx, c.k);
  for (const ElemPart& part : c.parts)
    full = full && part.cells.size() == 1 && part.cells[0].v.is_zero() &&
           part.cells[0].L == fullL && part.cells[0].c == shared;
  if (full) {
    std::string coeff = shared == Rat(1) ? "" : shared.str() + "*";
    os << coeff << "T~(p^" << c.k << ")";
    return os.str();
  }
  i64 cells = 0;
  for (const ElemPart& part : c.parts) cells += i64(part.cells.size());
  os << "element[k=" << c.k << ", parts=" << c.parts.size() << ", cells=" << cells
     << ", deg=" << deg(ctx, c).str() << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Representatives

std::pair<Mat, Vec> coset_representative(const PrimeContext& ctx, int k, const ElemPart& part,
                                         const Vec& v) {
  const int nk = ctx.n * k;
  if (nk + k + 2 > ctx.emax)
    throw std::overflow_error("coset_representative: precision exhausted");
  const i64 P = ctx.pk(k);
  Mat Rs = reduce_mod(part.R, ctx.pk(std::min(ctx.emax, nk + k + 2)));
  Mat Z = label_scaled_inverse(ctx, part.H, k);
  // X0^{-1} = R·H^{-1}: exact integer division of R·Z by p^{nk}.
  Mat X0inv = mul_div_mod(Rs, Z, ctx.pk(nk), P);
  return {part.R, mul_mod(X0inv, reduce_mod(v, P), P)};
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json element_to_json(const PrimeContext& ctx, const HeckeElement& x) {
  nlohmann::json parts = nlohmann::json::array();
  for (const ElemPart& part : x.parts) {
    nlohmann::json cells = nlohmann::json::array();
    for (const VectorCell& cell : part.cells) {
      nlohmann::json v = nlohmann::json::array();
      for (int i = 0; i < ctx.d; ++i) v.push_back(cell.v[i]);
      nlohmann::json basis = nlohmann::json::array();
      for (int i = 0; i < ctx.d; ++i)
        for (int j = 0; j < ctx.d; ++j) basis.push_back(cell.L.basis.at(i, j));
      cells.push_back(nlohmann::json{
          {"v", std::move(v)}, {"basis", std::move(basis)}, {"num", cell.c.num},
          {"den", cell.c.den}});
    }
    nlohmann::json H = nlohmann::json::array(), R = nlohmann::json::array();
    for (int i = 0; i < ctx.d * ctx.d; ++i) {
      H.push_back(part.H.a[size_t(i)]);
      R.push_back(part.R.a[size_t(i)]);
    }
    parts.push_back(nlohmann::json{{"H", std::move(H)},
                                   {"R", std::move(R)},
                                   {"unit", part.unit},
                                   {"cells", std::move(cells)}});
  }
  return nlohmann::json{{"version", kCodeVersion}, {"p", ctx.p},       {"n", ctx.n},
                        {"k", x.k},                {"invariant", x.invariant_claimed},
                        {"parts", std::move(parts)}};
}

HeckeElement element_from_json(const PrimeContext& ctx, const nlohmann::json& j) {
  if (!j.is_object() || j.value("version", -1) != kCodeVersion || j.value("p", i64(0)) != ctx.p ||
      j.value("n", -1) != ctx.n)
    throw std::invalid_argument("element_from_json: incompatible payload");
  HeckeElement x;
  x.k = j.at("k").get<int>();
  x.invariant_claimed = j.value("invariant", false);
  for (const auto& pj : j.at("parts")) {
    Mat H(ctx.d), R(ctx.d);
    const auto& hj = pj.at("H");
    const auto& rj = pj.at("R");
    if (int(hj.size()) != ctx.d * ctx.d || int(rj.size()) != ctx.d * ctx.d)
      throw std::invalid_argument("element_from_json: bad matrix size");
    for (int i = 0; i < ctx.d * ctx.d; ++i) {
      H.a[size_t(i)] = hj[size_t(i)].get<i64>();
      R.a[size_t(i)] = rj[size_t(i)].get<i64>();
    }
    ElemPart& part = x.touch_part(H, R, pj.value("unit", i64(1)));
    for (const auto& cj : pj.at("cells")) {
      Vec v(ctx.d);
      const auto& vj = cj.at("v");
      if (int(vj.size()) != ctx.d) throw std::invalid_argument("element_from_json: bad vector");
      for (int i = 0; i < ctx.d; ++i) v[i] = vj[size_t(i)].get<i64>();
      const auto& bj = cj.at("basis");
      if (int(bj.size()) != ctx.d * ctx.d)
        throw std::invalid_argument("element_from_json: bad basis");
      std::vector<Vec> rows;
      for (int i = 0; i < ctx.d; ++i) {
        Vec row(ctx.d);
        for (int c = 0; c < ctx.d; ++c) row[c] = bj[size_t(i * ctx.d + c)].get<i64>();
        rows.push_back(row);
      }
      Lattice L = lattice_from_gens(ctx, x.k, rows);
      x.add_cell(ctx, part, v, L, Rat(cj.at("num").get<i64>(), cj.at("den").get<i64>()));
    }
  }
  x.consolidate();
  return x;
}

}  // namespace hk
