#include "hecke/cache.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hk {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string CacheKey::filename() const {
  std::ostringstream os;
  os << "p" << p << "_n" << n << "_k" << k << "_" << label << "_g" << gens_version << "_c"
     << code_version << ".json";
  return os.str();
}

nlohmann::json CacheKey::to_json() const {
  return nlohmann::json{{"p", p},
                        {"n", n},
                        {"k", k},
                        {"label", label},
                        {"gens_version", gens_version},
                        {"code_version", code_version}};
}

bool CacheKey::matches(const nlohmann::json& j) const {
  return j.is_object() && j.value("p", -1LL) == p && j.value("n", -1) == n &&
         j.value("k", -1) == k && j.value("label", std::string()) == label &&
         j.value("gens_version", -1) == gens_version && j.value("code_version", -1) == code_version;
}

CacheIO CacheIO::resolve(const std::string& override_dir) {
  if (!override_dir.empty()) return CacheIO(override_dir);
  if (const char* env = std::getenv("HECKE_CACHE_DIR"); env != nullptr && *env != '\0')
    return CacheIO(env);
  return CacheIO(std::string());
}

std::optional<nlohmann::json> CacheIO::load(const CacheKey& key) const {
  if (!enabled()) return std::nullopt;
  const auto path = std::filesystem::path(dir_) / key.filename();
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json file = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (file.is_discarded() || !file.is_object()) return std::nullopt;
  if (!key.matches(file.value("key", nlohmann::json()))) return std::nullopt;
  if (!file.contains("payload") || !file.contains("checksum")) return std::nullopt;
  const std::string want = file["checksum"].is_string() ? file["checksum"].get<std::string>() : "";
  if (fnv1a_hex(file["payload"].dump()) != want) return std::nullopt;
  return file["payload"];
}

void CacheIO::store(const CacheKey& key, const nlohmann::json& payload) const {
  if (!enabled()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  const auto path = std::filesystem::path(dir_) / key.filename();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) return;
    nlohmann::json file{
        {"key", key.to_json()}, {"checksum", fnv1a_hex(payload.dump())}, {"payload", payload}};
    out << file.dump(1) << "\n";
    if (!out) return;
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

}  // namespace hk
