#pragma once
// Typed error hierarchy. Every exceptional condition the library contracts
// mention has its own type so tests can assert on the exact failure mode.

#include <stdexcept>
#include <string>

namespace hk {

struct HeckeError : std::runtime_error {
  explicit HeckeError(const std::string& m) : std::runtime_error(m) {}
};

// p-adic linear algebra
struct NonMaximalRank : HeckeError {
  explicit NonMaximalRank(const std::string& m) : HeckeError("NonMaximalRank: " + m) {}
};
struct NotSimilitude : HeckeError {
  explicit NotSimilitude(const std::string& m) : HeckeError("NotSimilitude: " + m) {}
};
struct NotAUnit : HeckeError {
  explicit NotAUnit(const std::string& m) : HeckeError("NotAUnit: " + m) {}
};

// coset layer
struct NotInMonoid : HeckeError {
  explicit NotInMonoid(const std::string& m) : HeckeError("NotInMonoid: " + m) {}
};
struct BudgetExceeded : HeckeError {
  explicit BudgetExceeded(const std::string& m) : HeckeError("BudgetExceeded: " + m) {}
};
struct CaseOutOfRange : HeckeError {
  explicit CaseOutOfRange(const std::string& m) : HeckeError("CaseOutOfRange: " + m) {}
};

// ring layer
struct NonIntegral : HeckeError {
  explicit NonIntegral(const std::string& m) : HeckeError("NonIntegral: " + m) {}
};
struct InvarianceNotClaimed : HeckeError {
  explicit InvarianceNotClaimed(const std::string& m) : HeckeError("InvarianceNotClaimed: " + m) {}
};
struct NotInImageOfS : HeckeError {
  explicit NotInImageOfS(const std::string& m) : HeckeError("NotInImageOfS: " + m) {}
};
struct NonConstantMultiplicity : HeckeError {
  explicit NonConstantMultiplicity(const std::string& m) : HeckeError("NonConstantMultiplicity: " + m) {}
};

}  // namespace hk
