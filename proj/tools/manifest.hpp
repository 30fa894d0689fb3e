#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace volrate::cli {

using Json = nlohmann::ordered_json;

struct InputDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

InputDigest digest_input(const std::string& path);

/// Provenance block embedded in every JSON report. Only `runtime` may differ between
/// runs with the same inputs.
struct RunManifest {
  std::string command;
  std::vector<InputDigest> inputs;
  std::uint64_t seed = 0;
  Json config = Json::object();
  std::string tool_version;
  int threads = 1;
  double elapsed_seconds = 0.0;

  Json to_json() const;
};

std::string tool_version();

/// Copy of a report with run-dependent fields (`runtime`, `elapsed_seconds`) removed.
Json strip_volatile(const Json& report);

}  // namespace volrate::cli
