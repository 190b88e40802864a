#include "hecke/expr.hpp"

#include <cctype>
#include <string>

#include "hecke/cosets.hpp"
#include "hecke/errors.hpp"

namespace hk {
namespace {

struct Parser {
  const std::string& text;
  const ExprEnv& env;
  size_t pos = 0;

  explicit Parser(const std::string& t, const ExprEnv& e) : text(t), env(e) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(pos) + " in \"" + text + "\"");
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  bool peek_ident_or_digit() {
    skip_ws();
    if (pos >= text.size()) return false;
    unsigned char c = static_cast<unsigned char>(text[pos]);
    return std::isalnum(c) || c == '_';
  }

  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size()) {
      unsigned char c = static_cast<unsigned char>(text[pos]);
      if (std::isalnum(c) || c == '_')
        ++pos;
      else
        break;
    }
    if (start == pos) fail("expected a name or number");
    return text.substr(start, pos - start);
  }

  i64 integer() {
    std::string tok = ident();
    size_t used = 0;
    i64 v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      fail("expected an integer, got \"" + tok + "\"");
    }
    if (used != tok.size()) fail("expected an integer, got \"" + tok + "\"");
    return v;
  }

  ExprValue parse() {
    ExprValue v = expression();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input");
    return v;
  }

  ExprValue expression() {
    ExprValue acc = term();
    for (;;) {
      if (eat('+'))
        acc = add(acc, term(), +1);
      else if (eat('-'))
        acc = add(acc, term(), -1);
      else
        return acc;
    }
  }

  ExprValue term() {
    ExprValue acc = unary();
    for (;;) {
      if (eat('*'))
        acc = mul(acc, unary());
      else if (eat('/'))
        acc = divide(acc, unary());
      else
        return acc;
    }
  }

  ExprValue unary() {
    if (eat('-')) return scale(Rat(-1), unary());
    return primary();
  }

  ExprValue primary() {
    if (eat('(')) {
      ExprValue v = expression();
      expect(')');
      return v;
    }
    if (!peek_ident_or_digit()) fail("expected an operand");
    if (std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ExprValue v;
      v.sort = ExprSort::Scalar;
      v.scalar = Rat(integer());
      return v;
    }
    std::string name = ident();
    if (name == "Tt") {
      expect('(');
      i64 k = integer();
      expect(')');
      if (k < 0) fail("Tt(k) needs k >= 0");
      ExprValue v;
      v.sort = ExprSort::Tilde;
      v.he = build_Ttilde_p(env.ctx, int(k), env.gens, env.budget, env.cache);
      return v;
    }
    if (name == "TA" || name == "TB") {
      if (env.ctx.n != 2)
        throw CaseOutOfRange(name + " is a genus-2 element (current genus " +
                             std::to_string(env.ctx.n) + ")");
      ExprValue v;
      v.sort = ExprSort::Matrix;
      Mat rep = name == "TA" ? c_alpha_beta_k(env.ctx, 0, 0, 1) : c_alpha_beta_k(env.ctx, 0, 1, 2);
      v.mx = matrix_double_coset(env.ctx, rep, env.gens, env.budget);
      return v;
    }
    if (name == "ep" || name == "epp") {
      ExprValue v;
      v.sort = ExprSort::Matrix;
      v.mx = mx_scalar(env.ctx, name == "ep" ? 1 : 2);
      return v;
    }
    if (name == "theta") {
      ExprValue v = parenthesized_arg(name);
      if (v.sort != ExprSort::Tilde) fail("theta() takes a tilde-ring element");
      v.he = theta(env.ctx, v.he);
      return v;
    }
    if (name == "phi") {
      ExprValue v = parenthesized_arg(name);
      if (v.sort != ExprSort::Tilde) fail("phi() takes a tilde-ring element");
      ExprValue out;
      out.sort = ExprSort::Matrix;
      out.mx = phi(env.ctx, v.he);
      return out;
    }
    if (name == "s") {
      ExprValue v = parenthesized_arg(name);
      if (v.sort != ExprSort::Matrix) fail("s() takes a matrix-ring element");
      ExprValue out;
      out.sort = ExprSort::Tilde;
      out.he = s_embed(env.ctx, v.mx);
      return out;
    }
    fail("unknown name \"" + name + "\"");
  }

  ExprValue parenthesized_arg(const std::string& fn) {
    if (!eat('(')) fail(fn + " needs a parenthesized argument");
    ExprValue v = expression();
    expect(')');
    return v;
  }

  static ExprValue scale(const Rat& r, ExprValue v) {
    switch (v.sort) {
      case ExprSort::Scalar: v.scalar = r * v.scalar; break;
      case ExprSort::Matrix: v.mx = matrix_scale(r, v.mx); break;
      case ExprSort::Tilde: v.he = he_scale(r, v.he); break;
    }
    return v;
  }

  ExprValue mul(const ExprValue& a, const ExprValue& b) {
    if (a.sort == ExprSort::Scalar) return scale(a.scalar, b);
    if (b.sort == ExprSort::Scalar) return scale(b.scalar, a);
    if (a.sort != b.sort)
      fail("cannot multiply matrix-ring and tilde-ring elements; embed with s() first");
    ExprValue out;
    out.sort = a.sort;
    if (a.sort == ExprSort::Matrix)
      out.mx = matrix_mul(env.ctx, a.mx, b.mx);
    else
      out.he = hecke_mul(env.ctx, a.he, b.he, env.budget);
    return out;
  }

  ExprValue divide(const ExprValue& a, const ExprValue& b) {
    if (b.sort != ExprSort::Scalar) fail("'/' divides by scalars only");
    if (b.scalar.is_zero()) fail("division by zero");
    return scale(Rat(b.scalar.den, b.scalar.num), a);
  }

  ExprValue add(const ExprValue& a, const ExprValue& b0, int sign) {
    ExprValue b = sign < 0 ? scale(Rat(-1), b0) : b0;
    if (a.sort != b.sort) fail("'+'/'-' need operands of the same sort");
    ExprValue out;
    out.sort = a.sort;
    switch (a.sort) {
      case ExprSort::Scalar: out.scalar = a.scalar + b.scalar; break;
      case ExprSort::Matrix: out.mx = matrix_add(a.mx, b.mx); break;
      case ExprSort::Tilde: out.he = he_add(a.he, b.he); break;
    }
    return out;
  }
};

}  // namespace

ExprValue eval_expression(const std::string& text, const ExprEnv& env) {
  Parser parser(text, env);
  return parser.parse();
}

}  // namespace hk
