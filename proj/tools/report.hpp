#pragma once
#include <chrono>
#include <map>
#include <string>

#include "json.hpp"

namespace cqpolar::cli {

extern const char* const kToolVersion;

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Everything needed to rerun a command. Only "timing" varies between
// identical runs.
struct RunManifest {
  std::string subcommand;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;  // path -> sha256 hex
  std::string started_at;                           // UTC, ISO 8601
  Stopwatch* clock = nullptr;                 // wall time so far, when set

  nlohmann::json to_json() const;
};

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::string& path);  // throws LoadError
std::string utc_now();

// Writes to a sibling temp file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

// JSON text the CLI emits: two-space indent, trailing newline.
std::string dump(const nlohmann::json& j);


}  // namespace cqpolar::cli
