#pragma once
// Exact verification of the displayed ring identities: the classical
// rationality recursions in the matrix ring, their lifts to the extended
// (tilde) ring through the section s and the twist theta, the structured
// double-coset identities behind them, and the noncommutativity witness.
//
// Every pass is an exact equality of ring elements (tolerance identically
// zero). Reports carry two optional certificates:
//  * theta: each theta application on that instance was re-derived through
//    its defining identity s(<p>)·theta(x) = x·s(<p>) by direct convolution;
//  * multiplied_through: the identity was additionally checked with all
//    theta twists eliminated — left-multiplying by powers Pi = s(<p>) turns
//    a term u·x^{theta^j} into u·Pi^{M-j}·x·Pi^j, so the second run shares
//    no code with the theta implementation.

#include <vector>

#include "hecke/cache.hpp"
#include "hecke/element.hpp"
#include "hecke/report.hpp"

namespace hk {

// Shared knobs. `budget` caps convolution cell pairs and orbit nodes per
// call; `stretch` is consulted by the CLI suite tables, not by the verifiers
// themselves (each verifier runs exactly the instance it is given).
struct VerifyEnv {
  i64 budget = 80'000'000;
  const CacheIO* cache = nullptr;
  bool stretch = false;
};

// Power series truncated at degree m_max, with extended-ring coefficients.
// y_scale records the substitution convention of the identity being checked:
// coefficients are compared after substituting Y = p^{y_scale}·X.
struct TruncatedSeries {
  int y_scale = 0;
  std::vector<HeckeElement> coeff;  // degrees 0..m_max
};

// The full-level series: coefficient k is the valuation-k sum (all matrix
// cosets, all translations, coefficient 1).
TruncatedSeries series_full_level(const PrimeContext& ctx, const GammaGenSet& gens, int m_max,
                                  int y_scale, const VerifyEnv& env = {});

// --- Matrix-ring rationality -----------------------------------------------
// n=1: (1 - T(diag(1,p))X + p<p>X^2) · P_1(X) = 1          mod X^{m_max+1}
// n=2: (sum q_i X^i) · P_2(X) = 1 - p^2<p>X^2              mod X^{m_max+1}
//      with q_1 = -T(diag(1,1,p,p)), q_2 = pT(diag(1,p,p^2,p)) + p(p^2+1)<p>,
//      q_3 = -p^3<p>T(diag(1,1,p,p)), q_4 = p^6<p^2>.
VerificationReport verify_rationality_n1(i64 p, int m_max, const VerifyEnv& env = {});
VerificationReport verify_rationality_n2(i64 p, int m_max, const VerifyEnv& env = {});

// --- Extended-ring identities ----------------------------------------------
// n=1 lift: sum_{i=0..2} q_i^s Y^i P~_1^{theta^{2-i}}(X) = 1, Y = pX.
VerificationReport verify_hy_n1(i64 p, int m_max, const VerifyEnv& env = {});

// n=2 lift, coefficient-wise: for each m <= m_max,
//   sum_{i=0..4} q_i^s · p^{2i} · T~(p^{m-i})^{theta^{4-i}}
//     = coefficient of X^m in g^s(p^2 X),   g(X) = 1 - p^2<p>X^2,
// with T~ of negative index zero. Coefficients at m <= 3 are additionally
// checked to lie in the image of s, and on small m the projection under phi
// is compared term by term against the matrix-ring recursion.
VerificationReport verify_main_theorem(i64 p, int m_max, const VerifyEnv& env = {});

// Tail form of the same recursions (N = 2^n): for fixed k >= 0,
//   sum_{i=0..N} p^{n(N-i)} q_{N-i}^s T~(p^{k+i})^{theta^i} = 0.
VerificationReport verify_reduced_identity(i64 p, int n, int k, const VerifyEnv& env = {});

// The two-sided n=2 corollary:
//   p^9<p>^s T(A)^s T~(p^{k+1})^theta + p^2 T(A)^s T~(p^{k+3})^{theta^3}
//     = p^14<p^2>^s T~(p^k)
//     + p^5 (T(B)^s + (p^2+1)<p>^s) T~(p^{k+2})^{theta^2}
//     + T~(p^{k+4})^{theta^4}.
VerificationReport verify_maincor(i64 p, int k, const VerifyEnv& env = {});

// Structured product formulas (n=2), C0_l = {diag(1,p^b,p^l,p^{l-b}) : 1 <= b <= l-b}:
//   T~(A,0)·T~(p^{k+1})^theta = T~(C0_{k+2}, P1 Z^4)^theta
//     + p^4(1+p)<p>^s T~(p^k) + p^3<p>^s T~(p^k)^theta + p^{-2} T~(p^{k+2})^{theta^2}
//   T~(B,0)·T~(p^{k+2})^{theta^2} = T~(C0_{k+4}, B Z^4)^{theta^2}
//     + T~(p C0_{k+2}, P1 Z^4)^{theta^2} + p^8<p^2>^s T~(p^k) + p^7<p^2>^s T~(p^k)^theta
//     + (p^2+p-1)<p>^s T~(p^{k+2})^{theta^2} + <p>^s T~(p^{k+2})^{theta^3}.
VerificationReport verify_prop_TA(i64 p, int k, const VerifyEnv& env = {});
VerificationReport verify_prop_TB(i64 p, int k, const VerifyEnv& env = {});

// The five theta relations feeding the propositions above (eq selects one):
//  (1) T~(p C_k, Z^4)^theta            = p^4<p>^s T~(p^k)
//  (2) T~(pA^{k+2}, A Z^4)^theta       = p^2 T~(pA^{k+2}, p Z^4)^theta
//  (3) T~(C0_{k+4}, P1 Z^4)^theta      = p^3 T~(C0_{k+4}, B Z^4)
//  (4) T~(p C0_{k+2}, P1 Z^4)^theta    = p^4<p>^s T~(C0_{k+2}, P1 Z^4)
//  (5) T~(p^{k+2})^theta = p^2 T~(A^{k+2}, pZ^4) + p^3 T~(C0_{k+2}, pZ^4)
//                        + p^4 T~(p C_k, pZ^4)
VerificationReport verify_lemma_thetheta(i64 p, int k, int eq, const VerifyEnv& env = {});

// T~(p^k)·T~(p^l) vs T~(p^l)·T~(p^k) for k < l: full products and multiset
// comparison at n <= 2; at n = 3 a targeted probe of the witness coset
//   (diag(p^k E, p^l E), (0, e_1))
// whose coefficient is positive in the first order and zero in the second.
VerificationReport noncommutativity_witness(i64 p, int n, int k, int l,
                                            const VerifyEnv& env = {});

// phi(T~(p^k)) = p^{nk} T(p^k) for all k <= m_max.
VerificationReport verify_phi_series(i64 p, int n, int m_max, const VerifyEnv& env = {});

}  // namespace hk
