#pragma once
// Small exact integer arithmetic used throughout the engine.
//
// All values the engine stores are integers of magnitude < 2^60 (reductions
// happen modulo p-powers capped by PrimeContext::emax, which respects that
// bound), so plain int64 storage with __int128 intermediates is exact.
// Overflow is a hard error, never a silent wrap.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hk {

using i64 = std::int64_t;
using i128 = __int128;

inline i64 checked_i64(i128 v, const char* what = "integer") {
  if (v > i128(INT64_MAX) || v < i128(INT64_MIN))
    throw std::overflow_error(std::string(what) + " exceeds 64-bit range");
  return static_cast<i64>(v);
}

// p^e as i64, guarded.
inline i64 ipow(i64 p, int e) {
  if (e < 0) throw std::invalid_argument("ipow: negative exponent");
  i128 r = 1;
  for (int i = 0; i < e; ++i) {
    r *= p;
    if (r > i128(INT64_MAX)) throw std::overflow_error("ipow overflow");
  }
  return static_cast<i64>(r);
}

// Euclidean remainder in [0, m).
inline i64 emod(i64 a, i64 m) {
  i64 r = a % m;
  return r < 0 ? r + m : r;
}

inline i64 emod128(i128 a, i64 m) {
  i128 r = a % m;
  return static_cast<i64>(r < 0 ? r + m : r);
}

// v_p of a nonzero integer; vp(0) returns `inf_marker` (callers treat as +inf).
constexpr int kValInfinity = 1 << 20;

inline int vp(i64 x, i64 p) {
  if (x == 0) return kValInfinity;
  int v = 0;
  while (x % p == 0) { x /= p; ++v; }
  return v;
}

// Exact rational with int64 numerator/denominator, always normalized with
// den > 0. Throws on overflow instead of wrapping; the verification contract
// is exactness or a hard error.
struct Rat {
  i64 num = 0;
  i64 den = 1;

  Rat() = default;
  Rat(i64 n) : num(n), den(1) {}
  Rat(i64 n, i64 d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::domain_error("Rat: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    i64 g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
    if (num == 0) den = 1;
  }

  static Rat make128(i128 n, i128 d) {
    if (d == 0) throw std::domain_error("Rat: zero denominator");
    if (d < 0) { n = -n; d = -d; }
    i128 a = n < 0 ? -n : n, b = d;
    while (b) { i128 t = a % b; a = b; b = t; }  // gcd
    if (a > 1) { n /= a; d /= a; }
    Rat r;
    r.num = checked_i64(n, "rational numerator");
    r.den = checked_i64(d, "rational denominator");
    return r;
  }

  bool is_zero() const { return num == 0; }
  bool is_integer() const { return den == 1; }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return make128(i128(a.num) * b.den + i128(b.num) * a.den, i128(a.den) * b.den);
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return make128(i128(a.num) * b.den - i128(b.num) * a.den, i128(a.den) * b.den);
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return make128(i128(a.num) * b.num, i128(a.den) * b.den);
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num == 0) throw std::domain_error("Rat: division by zero");
    return make128(i128(a.num) * b.den, i128(a.den) * b.num);
  }
  Rat operator-() const { Rat r; r.num = -num; r.den = den; return r; }
  Rat& operator+=(const Rat& o) { *this = *this + o; return *this; }
  Rat& operator-=(const Rat& o) { *this = *this - o; return *this; }
  Rat& operator*=(const Rat& o) { *this = *this * o; return *this; }
  friend bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

}  // namespace hk
