#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

namespace wsgat::testing {

// Directory of a real TUDataset corpus if one is available locally, looked up
// under $WSGAT_DATA_DIR and then <source>/data.
inline std::optional<std::filesystem::path> corpus_dir(const std::string& name) {
  std::vector<std::filesystem::path> roots;
  if (const char* env = std::getenv("WSGAT_DATA_DIR"); env && *env) roots.emplace_back(env);
#ifdef WSGAT_SOURCE_DIR
  roots.emplace_back(std::filesystem::path(WSGAT_SOURCE_DIR) / "data");
#endif
  for (const auto& root : roots) {
    const auto dir = root / name;
    if (std::filesystem::exists(dir / (name + "_A.txt"))) return dir;
  }
  return std::nullopt;
}

}  // namespace wsgat::testing
