#pragma once
// Uniform machine-readable outcome record shared by the brute-force oracles
// and the identity verifiers: a stable check name, the parameters it ran
// with, pass/fail, mismatch details when it failed, wall time, and optional
// certificate flags for checks that re-derive their result along a second
// route.

#include <string>

#include "json.hpp"

namespace hk {

struct VerificationReport {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
  bool ok = false;
  // One entry per mismatch; empty on pass. Entries are small JSON objects
  // naming the quantity, the expected value, and the computed value.
  nlohmann::json residual = nlohmann::json::array();
  double ms = 0.0;
  // Certificate flags: only meaningful when has_certs is set.
  bool has_certs = false;
  bool cert_theta = false;
  bool cert_multiplied_through = false;

  void mismatch(const std::string& what, const nlohmann::json& want, const nlohmann::json& got) {
    ok = false;
    residual.push_back(nlohmann::json{{"check", what}, {"want", want}, {"got", got}});
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"id", id},
                     {"params", params},
                     {"status", ok ? "pass" : "fail"},
                     {"residual", residual},
                     {"ms", ms}};
    if (has_certs)
      j["certs"] = nlohmann::json{{"theta", cert_theta},
                                  {"multiplied_through", cert_multiplied_through}};
    return j;
  }
};

}  // namespace hk
