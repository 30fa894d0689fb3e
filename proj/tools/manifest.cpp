#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "cli_common.hpp"

namespace volrate::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 initialisation failed");
  }
  std::array<char, 1 << 15> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw std::runtime_error("sha256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("sha256 finalisation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xf]);
  }
  return hex;
}

InputDigest digest_input(const std::string& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw InputError("cannot read " + path);
  return {path, sha256_file(path), size};
}

std::string tool_version() { return VOLRATE_VERSION; }

Json RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  Json files = Json::array();
  for (const auto& in : inputs) {
    files.push_back({{"path", in.path}, {"sha256", in.sha256}, {"bytes", in.bytes}});
  }
  j["inputs"] = files;
  j["config"] = config;
  j["runtime"] = {{"threads", threads}, {"elapsed_seconds", elapsed_seconds}};
  return j;
}

Json strip_volatile(const Json& report) {
  if (report.is_object()) {
    Json out = Json::object();
    for (auto it = report.begin(); it != report.end(); ++it) {
      if (it.key() == "runtime" || it.key() == "elapsed_seconds") continue;
      out[it.key()] = strip_volatile(it.value());
    }
    return out;
  }
  if (report.is_array()) {
    Json out = Json::array();
    for (const auto& v : report) out.push_back(strip_volatile(v));
    return out;
  }
  return report;
}

}  // namespace volrate::cli
