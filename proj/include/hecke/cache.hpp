#pragma once
// Tiny on-disk cache for expensive enumerations (coset lists, orbit labels).
//
// Files are JSON with an embedded FNV-1a checksum of the payload; a missing,
// unreadable, mismatched, or corrupt file simply reports "not cached" and the
// caller recomputes and overwrites. The cache directory is resolved as:
// explicit --cache-dir flag > HECKE_CACHE_DIR environment variable > disabled.

#include <optional>
#include <string>

#include "json.hpp"

namespace hk {

// Bumped whenever a change could invalidate cached enumerations.
inline constexpr int kCodeVersion = 1;

struct CacheKey {
  long long p = 0;
  int n = 0;
  int k = 0;                 // valuation / level of the cached object
  std::string label;         // what is cached, e.g. "matrix-cosets"
  int gens_version = 0;      // generator-set version the data depends on
  int code_version = kCodeVersion;

  std::string filename() const;
  nlohmann::json to_json() const;
  bool matches(const nlohmann::json& j) const;
};

class CacheIO {
 public:
  // Empty dir disables the cache entirely.
  explicit CacheIO(std::string dir) : dir_(std::move(dir)) {}

  // override_dir (from a CLI flag) wins over HECKE_CACHE_DIR; empty string +
  // unset variable means disabled.
  static CacheIO resolve(const std::string& override_dir);

  bool enabled() const { return !dir_.empty(); }
  const std::string& dir() const { return dir_; }

  // Returns the payload if a valid entry exists.
  std::optional<nlohmann::json> load(const CacheKey& key) const;

  // Best-effort store; failures are silent (cache is purely an accelerator).
  void store(const CacheKey& key, const nlohmann::json& payload) const;

 private:
  std::string dir_;
};

// FNV-1a over a byte string, as a fixed-width hex string.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace hk
