// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_MANIFEST_HPP
#define D2DSIM_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace d2dsim {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written next to every run's outputs.
struct RunManifest {
  std::string command;
  std::string config;         // canonical form
  std::string config_digest;  // sha256 of `config`
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, sha256
  std::string tool_version{kToolVersion};
  std::string started_utc;
  std::string finished_utc;
};

std::string utc_now();

std::string manifest_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace d2dsim

#endif  // D2DSIM_MANIFEST_HPP
