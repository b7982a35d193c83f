#include "wsgat/fetch.hpp"

#include <curl/curl.h>
#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "wsgat/errors.hpp"

namespace wsgat {
namespace {

std::size_t write_to_stream(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
  auto* out = static_cast<std::ofstream*>(userdata);
  out->write(ptr, static_cast<std::streamsize>(size * nmemb));
  return out->good() ? size * nmemb : 0;
}

std::uint32_t le32(const std::vector<unsigned char>& b, std::size_t at) {
  if (at + 4 > b.size()) throw IoError("zip: truncated archive");
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t le16(const std::vector<unsigned char>& b, std::size_t at) {
  if (at + 2 > b.size()) throw IoError("zip: truncated archive");
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

std::vector<unsigned char> inflate_raw(const unsigned char* data, std::size_t size, std::size_t expected) {
  std::vector<unsigned char> out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw IoError("zip: inflateInit failed");
  zs.next_in = const_cast<unsigned char*>(data);
  zs.avail_in = static_cast<uInt>(size);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw IoError("zip: corrupt deflate stream");
  return out;
}

}  // namespace

void download_file(const std::string& url, const std::filesystem::path& dest) {
  static const bool initialized = curl_global_init(CURL_GLOBAL_DEFAULT) == CURLE_OK;
  if (!initialized) throw IoError("libcurl initialization failed");
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
  if (!curl) throw IoError("libcurl handle creation failed");

  std::ofstream out(dest, std::ios::binary);
  if (!out) throw IoError("cannot write " + dest.string());
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, write_to_stream);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &out);
  const CURLcode rc = curl_easy_perform(curl.get());
  out.close();
  if (rc != CURLE_OK) {
    std::filesystem::remove(dest);
    throw IoError("download of " + url + " failed: " + curl_easy_strerror(rc));
  }
}

std::vector<std::filesystem::path> extract_zip(const std::filesystem::path& archive,
                                               const std::filesystem::path& dest) {
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw IoError("cannot open " + archive.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // End-of-central-directory record: scan back over a possible comment.
  constexpr std::uint32_t kEocd = 0x06054b50, kCentral = 0x02014b50, kLocal = 0x04034b50;
  if (bytes.size() < 22) throw IoError("zip: " + archive.string() + " is too small");
  std::size_t eocd = bytes.size() - 22;
  while (le32(bytes, eocd) != kEocd) {
    if (eocd == 0 || bytes.size() - eocd > 22 + 0xFFFF) throw IoError("zip: no end of central directory");
    --eocd;
  }
  const std::size_t entries = le16(bytes, eocd + 10);
  std::size_t cursor = le32(bytes, eocd + 16);

  const auto root = std::filesystem::weakly_canonical(dest);
  std::vector<std::filesystem::path> written;
  for (std::size_t e = 0; e < entries; ++e) {
    if (le32(bytes, cursor) != kCentral) throw IoError("zip: bad central directory entry");
    const std::uint16_t method = le16(bytes, cursor + 10);
    const std::uint32_t crc = le32(bytes, cursor + 16);
    const std::uint32_t compressed = le32(bytes, cursor + 20);
    const std::uint32_t uncompressed = le32(bytes, cursor + 24);
    const std::uint16_t name_len = le16(bytes, cursor + 28);
    const std::uint16_t extra_len = le16(bytes, cursor + 30);
    const std::uint16_t comment_len = le16(bytes, cursor + 32);
    const std::uint32_t local = le32(bytes, cursor + 42);
    if (cursor + 46 + name_len > bytes.size()) throw IoError("zip: truncated entry name");
    const std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(cursor + 46),
                           bytes.begin() + static_cast<std::ptrdiff_t>(cursor + 46 + name_len));
    cursor += 46u + name_len + extra_len + comment_len;

    const auto target = std::filesystem::weakly_canonical(root / name);
    const auto rel = target.lexically_relative(root);
    if (rel.empty() || *rel.begin() == "..") throw IoError("zip: entry '" + name + "' escapes the destination");
    if (!name.empty() && name.back() == '/') {
      std::filesystem::create_directories(target);
      continue;
    }
    // Skip the resource-fork metadata macOS archivers add.
    if (name.rfind("__MACOSX/", 0) == 0) continue;

    if (le32(bytes, local) != kLocal) throw IoError("zip: bad local header for " + name);
    const std::size_t data_at = local + 30u + le16(bytes, local + 26) + le16(bytes, local + 28);
    if (data_at + compressed > bytes.size()) throw IoError("zip: truncated data for " + name);
    std::vector<unsigned char> data;
    if (method == 0) {
      data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_at),
                  bytes.begin() + static_cast<std::ptrdiff_t>(data_at + compressed));
    } else if (method == 8) {
      data = inflate_raw(bytes.data() + data_at, compressed, uncompressed);
    } else {
      throw IoError("zip: unsupported compression method " + std::to_string(method) + " for " + name);
    }
    if (crc32(0L, data.data(), static_cast<uInt>(data.size())) != crc) throw IoError("zip: CRC mismatch for " + name);

    std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("cannot write " + target.string());
    written.push_back(target);
  }
  return written;
}

std::filesystem::path fetch_tu_dataset(const std::string& name, const std::string& base_url,
                                       const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  const auto archive = root / (name + ".zip");
  std::string url = base_url;
  if (!url.empty() && url.back() != '/') url += '/';
  download_file(url + name + ".zip", archive);
  extract_zip(archive, root);
  std::filesystem::remove(archive);
  const auto dir = root / name;
  if (!std::filesystem::exists(dir / (name + "_A.txt"))) {
    throw IngestionError("archive for " + name + " did not contain " + name + "/" + name + "_A.txt");
  }
  return dir;
}

}  // namespace wsgat
