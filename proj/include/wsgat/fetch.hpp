#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace wsgat {

inline constexpr const char* kDefaultDatasetBaseUrl = "https://www.chrsmrrs.com/graphkerneldatasets";

// Downloads `url` (any scheme libcurl supports, including file://) to `dest`.
void download_file(const std::string& url, const std::filesystem::path& dest);

// Unpacks a zip archive (stored or deflated entries) under `dest`.
// Entries that would escape `dest` are rejected. Returns the written files.
std::vector<std::filesystem::path> extract_zip(const std::filesystem::path& archive,
                                               const std::filesystem::path& dest);

// Fetches <base_url>/<name>.zip into `root` and unpacks it, producing
// root/<name>/<name>_A.txt etc. Returns the dataset directory.
std::filesystem::path fetch_tu_dataset(const std::string& name, const std::string& base_url,
                                       const std::filesystem::path& root);

}  // namespace wsgat
