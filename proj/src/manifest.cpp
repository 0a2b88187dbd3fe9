// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>

#include "json.hpp"

namespace d2dsim {
namespace {

using Json = nlohmann::ordered_json;

std::string hex(const unsigned char* data, unsigned len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 0xF];
  }
  return out;
}

Json pairs_json(const std::vector<std::pair<std::string, std::string>>& pairs, const char* key) {
  Json arr = Json::array();
  for (const auto& [name, digest] : pairs) arr.push_back({{key, name}, {"sha256", digest}});
  return arr;
}

std::vector<std::pair<std::string, std::string>> pairs_from(const Json& arr, const char* key) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : arr) out.emplace_back(e.at(key).get<std::string>(), e.at("sha256").get<std::string>());
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  return hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(data);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["config_digest"] = m.config_digest;
  j["config"] = m.config;
  j["inputs"] = pairs_json(m.inputs, "path");
  j["outputs"] = pairs_json(m.outputs, "file");
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest_json(m);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const Json j = Json::parse(in);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.config = j.at("config").get<std::string>();
  m.inputs = pairs_from(j.at("inputs"), "path");
  m.outputs = pairs_from(j.at("outputs"), "file");
  m.started_utc = j.at("started_utc").get<std::string>();
  m.finished_utc = j.at("finished_utc").get<std::string>();
  return m;
}

}  // namespace d2dsim
