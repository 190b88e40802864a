// Command-line front end: `verify <suite>` runs the identity and oracle
// suites and streams one JSON report per instance; `compute <expr>` evaluates
// an expression in the two rings and dumps the resulting element.

#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hecke/expr.hpp"
#include "hecke/oracle.hpp"
#include "hecke/parallel.hpp"
#include "hecke/verify.hpp"

namespace {

using hk::i64;
using hk::VerificationReport;
using nlohmann::json;

struct CliConfig {
  i64 p = 2;
  std::optional<int> n;
  std::optional<int> m_max;
  std::optional<int> k;
  int threads = 0;
  i64 budget = 80'000'000;
  std::string cache_dir;
  bool stretch = false;
  std::string format = "json";
};

std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void emit(const VerificationReport& rep, const std::string& format) {
  if (format == "json") {
    std::printf("%s\n", rep.to_json().dump().c_str());
  } else if (format == "csv") {
    std::printf("%s,%s,%.1f,%s\n", rep.id.c_str(), rep.ok ? "pass" : "fail", rep.ms,
                csv_escape(rep.params.dump()).c_str());
  } else {
    std::printf("%-18s %-44s %s  (%.0f ms)\n", rep.id.c_str(), rep.params.dump().c_str(),
                rep.ok ? "PASS" : "FAIL", rep.ms);
    if (!rep.ok) std::printf("    residual: %s\n", rep.residual.dump().c_str());
  }
  std::fflush(stdout);
}

// Runs every report producer of a suite, streaming as results arrive.
struct SuiteRunner {
  const CliConfig& cfg;
  hk::VerifyEnv env;
  bool all_ok = true;

  void run(const std::function<VerificationReport()>& producer) {
    emit(producer(), cfg.format);
  }
  void add(const VerificationReport& rep) {
    all_ok = all_ok && rep.ok;
    emit(rep, cfg.format);
  }
};

void suite_rationality_n1(SuiteRunner& r, const CliConfig& c) {
  r.add(verify_rationality_n1(c.p, c.m_max.value_or(6), r.env));
}

void suite_rationality_n2(SuiteRunner& r, const CliConfig& c) {
  r.add(verify_rationality_n2(c.p, c.m_max.value_or(c.p == 2 ? 4 : 3), r.env));
}

void suite_hy_n1(SuiteRunner& r, const CliConfig& c) {
  r.add(verify_hy_n1(c.p, c.m_max.value_or(c.p == 2 ? 5 : 4), r.env));
  for (int k = 0; k <= 2; ++k) r.add(verify_reduced_identity(c.p, 1, c.k.value_or(k), r.env));
}

void suite_main_n2(SuiteRunner& r, const CliConfig& c) {
  r.add(verify_main_theorem(c.p, c.m_max.value_or(c.p == 2 ? 4 : 3), r.env));
  r.add(verify_reduced_identity(c.p, 2, c.k.value_or(0), r.env));
  if (c.stretch && !c.k) r.add(verify_reduced_identity(c.p, 2, 1, r.env));
}

void suite_maincor(SuiteRunner& r, const CliConfig& c) {
  r.add(verify_maincor(c.p, c.k.value_or(0), r.env));
  if (c.stretch && !c.k) r.add(verify_maincor(c.p, 1, r.env));
}

void suite_prop_ta(SuiteRunner& r, const CliConfig& c) {
  if (c.k) {
    r.add(verify_prop_TA(c.p, *c.k, r.env));
  } else {
    r.add(verify_prop_TA(c.p, 0, r.env));
    r.add(verify_prop_TA(c.p, 1, r.env));
  }
}

void suite_prop_tb(SuiteRunner& r, const CliConfig& c) {
  r.add(verify_prop_TB(c.p, c.k.value_or(0), r.env));
}

void suite_thetheta(SuiteRunner& r, const CliConfig& c) {
  std::vector<int> ks = c.k ? std::vector<int>{*c.k} : std::vector<int>{0, 1};
  for (int k : ks)
    for (int eq = 1; eq <= 5; ++eq) r.add(verify_lemma_thetheta(c.p, k, eq, r.env));
}

void suite_noncomm(SuiteRunner& r, const CliConfig& c) {
  std::vector<int> ns = c.n ? std::vector<int>{*c.n} : std::vector<int>{1, 2, 3};
  for (int n : ns) r.add(hk::noncommutativity_witness(c.p, n, 1, 2, r.env));
}

void suite_phi_series(SuiteRunner& r, const CliConfig& c) {
  std::vector<int> ns = c.n ? std::vector<int>{*c.n} : std::vector<int>{1, 2};
  for (int n : ns) r.add(verify_phi_series(c.p, n, c.m_max.value_or(n == 1 ? 3 : 2), r.env));
}

void suite_oracles(SuiteRunner& r, const CliConfig& c) {
  r.add(hk::validate_generators(c.p, r.env.budget));
  r.add(hk::verify_lemma_decomposition(c.p, r.env.budget));
  r.add(hk::verify_rank_lemma(c.p, r.env.budget));
  r.add(hk::verify_rep_lists(c.p, 4, r.env.budget));
  if (c.p == 2) {
    r.add(hk::verify_degree_formula(r.env.budget));
    r.add(hk::verify_coset_count_product(c.p, hk::RepFamily::A, 1, r.env.budget));
    r.add(hk::verify_coset_count_product(c.p, hk::RepFamily::A, 2, r.env.budget));
    r.add(hk::verify_coset_count_product(c.p, hk::RepFamily::B, 0, r.env.budget));
  }
}

int cmd_verify(const std::string& suite, const CliConfig& cfg, const hk::CacheIO& cache) {
  SuiteRunner runner{cfg, hk::VerifyEnv{cfg.budget, cache.enabled() ? &cache : nullptr,
                                        cfg.stretch},
                     true};
  using SuiteFn = void (*)(SuiteRunner&, const CliConfig&);
  const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"rationality-n1", suite_rationality_n1},
      {"rationality-n2", suite_rationality_n2},
      {"hy-n1", suite_hy_n1},
      {"main-n2", suite_main_n2},
      {"maincor", suite_maincor},
      {"prop-ta", suite_prop_ta},
      {"prop-tb", suite_prop_tb},
      {"thetheta", suite_thetheta},
      {"noncomm", suite_noncomm},
      {"phi-series", suite_phi_series},
      {"oracles", suite_oracles},
  };
  bool matched = false;
  for (const auto& [name, fn] : suites) {
    if (suite == name || suite == "all") {
      matched = true;
      fn(runner, cfg);
    }
  }
  if (!matched) {
    std::fprintf(stderr, "unknown suite \"%s\"\n", suite.c_str());
    return 2;
  }
  return runner.all_ok ? 0 : 1;
}

json decompose_json(const hk::PrimeContext& ctx, const hk::HeckeElement& he,
                    const hk::GammaGenSet& gens, i64 budget) {
  json out = json::array();
  try {
    for (const auto& piece : hk::decompose(ctx, he, gens, budget))
      out.push_back({{"label", piece.label.str()}, {"mult", piece.mult}});
  } catch (const std::exception& e) {
    out = json{{"error", e.what()}};
  }
  return out;
}

int cmd_compute(const std::string& expr, const CliConfig& cfg, const hk::CacheIO& cache) {
  hk::PrimeContext ctx(cfg.p, cfg.n.value_or(2));
  hk::GammaGenSet gens = hk::gamma_generators(ctx);
  hk::ExprEnv env{ctx, gens, cfg.budget, cache.enabled() ? &cache : nullptr};
  hk::ExprValue val = hk::eval_expression(expr, env);

  json out{{"expr", expr}, {"p", cfg.p}, {"n", ctx.n}};
  switch (val.sort) {
    case hk::ExprSort::Scalar:
      out["sort"] = "scalar";
      out["value"] = val.scalar.str();
      break;
    case hk::ExprSort::Matrix: {
      out["sort"] = "matrix";
      out["valuation"] = val.mx.k;
      out["deg"] = deg(val.mx).str();
      json parts = json::array();
      for (const auto& part : val.mx.parts)
        parts.push_back({{"coset", part.H.str()}, {"coeff", part.c.str()}});
      out["parts"] = parts;
      break;
    }
    case hk::ExprSort::Tilde: {
      out["sort"] = "tilde";
      out["valuation"] = val.he.k;
      out["deg"] = deg(ctx, val.he).str();
      i64 cells = 0;
      for (const auto& part : val.he.parts) cells += i64(part.cells.size());
      out["part_count"] = i64(val.he.parts.size());
      out["cell_count"] = cells;
      out["zero"] = hk::is_zero(ctx, val.he, cfg.budget);
      out["decompose"] = decompose_json(ctx, val.he, gens, cfg.budget);
      out["element"] = hk::element_to_json(ctx, val.he);
      break;
    }
  }
  if (cfg.format == "text") {
    std::printf("sort: %s\n", out["sort"].get<std::string>().c_str());
    if (out.contains("value")) std::printf("value: %s\n", out["value"].get<std::string>().c_str());
    if (out.contains("valuation")) std::printf("valuation: %d\n", out["valuation"].get<int>());
    if (out.contains("deg")) std::printf("deg: %s\n", out["deg"].get<std::string>().c_str());
    if (out.contains("parts")) std::printf("parts: %s\n", out["parts"].dump(2).c_str());
    if (out.contains("part_count"))
      std::printf("parts: %lld  cells: %lld  zero: %s\n", (long long)out["part_count"],
                  (long long)out["cell_count"], out["zero"].get<bool>() ? "yes" : "no");
    if (out.contains("decompose")) std::printf("decompose: %s\n", out["decompose"].dump(2).c_str());
  } else {
    std::printf("%s\n", out.dump().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact computations in the extended Hecke rings of symplectic similitude groups"};
  app.require_subcommand(1);

  CliConfig cfg;
  std::string suite, expr;

  auto add_common = [&cfg](CLI::App* cmd) {
    cmd->add_option("--p", cfg.p, "prime")->check(CLI::PositiveNumber);
    cmd->add_option("--n", cfg.n, "genus (1, 2, or 3 for the noncommutativity probe)");
    cmd->add_option("--mmax", cfg.m_max, "series truncation order");
    cmd->add_option("--k", cfg.k, "valuation shift for the shifted identities");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    cmd->add_option("--budget", cfg.budget, "work cap (cell pairs / orbit nodes)");
    cmd->add_option("--cache-dir", cfg.cache_dir,
                    "enumeration cache directory (HECKE_CACHE_DIR also honored)");
    cmd->add_flag("--stretch", cfg.stretch, "include the slow opt-in instances");
    cmd->add_option("--format", cfg.format, "output format")
        ->check(CLI::IsMember({"json", "csv", "text"}));
  };

  CLI::App* verify = app.add_subcommand(
      "verify", "run a verification suite, one JSON report per line, exit 0 iff all pass");
  verify->add_option("suite", suite,
                     "rationality-n1 | rationality-n2 | hy-n1 | main-n2 | maincor | prop-ta | "
                     "prop-tb | thetheta | noncomm | phi-series | oracles | all")
      ->required();
  add_common(verify);

  CLI::App* compute =
      app.add_subcommand("compute", "evaluate an expression and dump the resulting element");
  compute->add_option("expr", expr, "e.g. \"Tt(1)*Tt(2) - Tt(2)*Tt(1)\"")->required();
  add_common(compute);

  CLI11_PARSE(app, argc, argv);

  if (cfg.threads > 0) hk::set_thread_count(cfg.threads);
  hk::CacheIO cache = hk::CacheIO::resolve(cfg.cache_dir);

  try {
    if (verify->parsed()) return cmd_verify(suite, cfg, cache);
    return cmd_compute(expr, cfg, cache);
  } catch (const std::exception& e) {
    json err{{"status", "error"}, {"what", e.what()}};
    std::printf("%s\n", err.dump().c_str());
    return 2;
  }
}
