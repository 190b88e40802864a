#pragma once
// A small expression language over the two rings, used by the command-line
// `compute` command.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := INT                          scalar literal
//            | 'Tt' '(' INT ')'             full valuation-k element (tilde ring)
//            | 'TA'                         double coset of diag(1,1,p,p)   (matrix ring, genus 2)
//            | 'TB'                         double coset of diag(1,p,p^2,p) (matrix ring, genus 2)
//            | 'ep'                         scalar coset of p·E             (matrix ring)
//            | 'epp'                        scalar coset of p^2·E           (matrix ring)
//            | 'theta' '(' expr ')'         twist           (tilde -> tilde)
//            | 'phi'   '(' expr ')'         projection      (tilde -> matrix)
//            | 's'     '(' expr ')'         embedding       (matrix -> tilde)
//            | '(' expr ')'
//
// Values carry a sort: scalar, matrix-ring element, or tilde-ring element.
// '*' multiplies within a sort and scales by scalars; '+'/'-' require equal
// sorts (and equal valuations, enforced by the ring addition); '/' divides
// by scalars only. Mixing the two rings directly is an error — embed the
// matrix factor with s() first.

#include <string>

#include "hecke/cache.hpp"
#include "hecke/context.hpp"
#include "hecke/element.hpp"
#include "hecke/gens.hpp"

namespace hk {

struct ParseError : HeckeError {
  explicit ParseError(const std::string& m) : HeckeError("ParseError: " + m) {}
};

enum class ExprSort { Scalar, Matrix, Tilde };

struct ExprValue {
  ExprSort sort = ExprSort::Scalar;
  Rat scalar{0};
  MatrixElement mx;
  HeckeElement he;
};

struct ExprEnv {
  const PrimeContext& ctx;
  const GammaGenSet& gens;
  i64 budget = 10'000'000;
  const CacheIO* cache = nullptr;
};

// Parses and evaluates in one pass. Throws ParseError on malformed input and
// the usual engine errors (CaseOutOfRange, BudgetExceeded, ...) during
// evaluation.
ExprValue eval_expression(const std::string& text, const ExprEnv& env);

}  // namespace hk
