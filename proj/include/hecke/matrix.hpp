#pragma once
// Dense square matrices and vectors of dimension d <= 6 (d = 2n for the
// symplectic similitude groups with n = 1, 2, 3). Fixed-capacity storage keeps
// them trivially copyable and cheap to hash, which matters: matrices are the
// keys of every coset table in the engine.

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>

#include "hecke/arith.hpp"

namespace hk {

constexpr int kMaxDim = 6;

struct Vec {
  int d = 0;
  std::array<i64, kMaxDim> a{};

  Vec() = default;
  explicit Vec(int dim) : d(dim) { a.fill(0); }
  i64& operator[](int i) { return a[size_t(i)]; }
  i64 operator[](int i) const { return a[size_t(i)]; }

  friend bool operator==(const Vec& x, const Vec& y) {
    if (x.d != y.d) return false;
    for (int i = 0; i < x.d; ++i)
      if (x.a[size_t(i)] != y.a[size_t(i)]) return false;
    return true;
  }
  friend bool operator!=(const Vec& x, const Vec& y) { return !(x == y); }
  // Lexicographic order on coordinate tuples.
  friend bool operator<(const Vec& x, const Vec& y) {
    for (int i = 0; i < x.d; ++i) {
      if (x.a[size_t(i)] != y.a[size_t(i)]) return x.a[size_t(i)] < y.a[size_t(i)];
    }
    return false;
  }

  bool is_zero() const {
    for (int i = 0; i < d; ++i)
      if (a[size_t(i)] != 0) return false;
    return true;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < d; ++i) s += (i ? "," : "") + std::to_string(a[size_t(i)]);
    return s + ")";
  }
};

struct Mat {
  int d = 0;
  std::array<i64, kMaxDim * kMaxDim> a{};

  Mat() = default;
  explicit Mat(int dim) : d(dim) { a.fill(0); }

  i64& at(int i, int j) { return a[size_t(i * d + j)]; }
  i64 at(int i, int j) const { return a[size_t(i * d + j)]; }

  static Mat identity(int dim) {
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1;
    return m;
  }

  static Mat diag(std::initializer_list<i64> entries) {
    Mat m(int(entries.size()));
    int i = 0;
    for (i64 e : entries) { m.at(i, i) = e; ++i; }
    return m;
  }

  static Mat from_rows(int dim, std::initializer_list<i64> entries) {
    Mat m(dim);
    int k = 0;
    for (i64 e : entries) m.a[size_t(k++)] = e;
    return m;
  }

  friend bool operator==(const Mat& x, const Mat& y) {
    if (x.d != y.d) return false;
    for (int i = 0; i < x.d * x.d; ++i)
      if (x.a[size_t(i)] != y.a[size_t(i)]) return false;
    return true;
  }
  friend bool operator!=(const Mat& x, const Mat& y) { return !(x == y); }
  // Lexicographic on the row-major entry tuple; the tie-break order used by
  // double-coset labels.
  friend bool operator<(const Mat& x, const Mat& y) {
    for (int i = 0; i < x.d * x.d; ++i) {
      if (x.a[size_t(i)] != y.a[size_t(i)]) return x.a[size_t(i)] < y.a[size_t(i)];
    }
    return false;
  }

  Mat transpose() const {
    Mat t(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) t.at(j, i) = at(i, j);
    return t;
  }

  std::string str() const {
    std::string s = "[";
    for (int i = 0; i < d; ++i) {
      s += i ? "; " : "";
      for (int j = 0; j < d; ++j) s += (j ? "," : "") + std::to_string(at(i, j));
    }
    return s + "]";
  }
};

// Exact products (throw on 64-bit overflow; never reachable under the
// PrimeContext magnitude guards, kept as a hard backstop).
inline Mat mul(const Mat& x, const Mat& y) {
  Mat r(x.d);
  for (int i = 0; i < x.d; ++i)
    for (int j = 0; j < x.d; ++j) {
      i128 s = 0;
      for (int k = 0; k < x.d; ++k) s += i128(x.at(i, k)) * y.at(k, j);
      r.at(i, j) = checked_i64(s, "matrix product entry");
    }
  return r;
}

inline Vec mul(const Mat& x, const Vec& v) {
  Vec r(x.d);
  for (int i = 0; i < x.d; ++i) {
    i128 s = 0;
    for (int k = 0; k < x.d; ++k) s += i128(x.at(i, k)) * v[k];
    r[i] = checked_i64(s, "matrix-vector entry");
  }
  return r;
}

inline Mat mul_mod(const Mat& x, const Mat& y, i64 m) {
  Mat r(x.d);
  for (int i = 0; i < x.d; ++i)
    for (int j = 0; j < x.d; ++j) {
      i128 s = 0;
      for (int k = 0; k < x.d; ++k) s += i128(x.at(i, k)) * y.at(k, j);
      r.at(i, j) = emod128(s, m);
    }
  return r;
}

inline Vec mul_mod(const Mat& x, const Vec& v, i64 m) {
  Vec r(x.d);
  for (int i = 0; i < x.d; ++i) {
    i128 s = 0;
    for (int k = 0; k < x.d; ++k) s += i128(x.at(i, k)) * v[k];
    r[i] = emod128(s, m);
  }
  return r;
}

inline Mat scale(const Mat& x, i64 c) {
  Mat r(x.d);
  for (int i = 0; i < x.d * x.d; ++i) r.a[size_t(i)] = checked_i64(i128(x.a[size_t(i)]) * c);
  return r;
}

inline Vec scale(const Vec& v, i64 c) {
  Vec r(v.d);
  for (int i = 0; i < v.d; ++i) r[i] = checked_i64(i128(v[i]) * c);
  return r;
}

inline Vec scale_mod(const Vec& v, i64 c, i64 m) {
  Vec r(v.d);
  for (int i = 0; i < v.d; ++i) r[i] = emod128(i128(v[i]) * c, m);
  return r;
}

inline Vec add_mod(const Vec& x, const Vec& y, i64 m) {
  Vec r(x.d);
  for (int i = 0; i < x.d; ++i) r[i] = emod(x[i] + y[i], m);
  return r;
}

inline Mat reduce_mod(const Mat& x, i64 m) {
  Mat r(x.d);
  for (int i = 0; i < x.d * x.d; ++i) r.a[size_t(i)] = emod(x.a[size_t(i)], m);
  return r;
}

inline Vec reduce_mod(const Vec& v, i64 m) {
  Vec r(v.d);
  for (int i = 0; i < v.d; ++i) r[i] = emod(v[i], m);
  return r;
}

// FNV-1a over the entry tuple.
struct MatHash {
  size_t operator()(const Mat& m) const {
    size_t h = 1469598103934665603ull;
    auto mix = [&h](i64 v) {
      h ^= size_t(v);
      h *= 1099511628211ull;
    };
    mix(m.d);
    for (int i = 0; i < m.d * m.d; ++i) mix(m.a[size_t(i)]);
    return h;
  }
};

struct VecHash {
  size_t operator()(const Vec& v) const {
    size_t h = 1469598103934665603ull;
    auto mix = [&h](i64 x) {
      h ^= size_t(x);
      h *= 1099511628211ull;
    };
    mix(v.d);
    for (int i = 0; i < v.d; ++i) mix(v.a[size_t(i)]);
    return h;
  }
};

}  // namespace hk
