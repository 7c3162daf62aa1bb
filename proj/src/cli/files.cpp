// Copyright 2026 The WADC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "wadc/cli.hpp"
#include "wadc/error.hpp"
#include "wadc/network_io.hpp"

namespace wadc::cli {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const fs::path& p) { return parse_json_text(read_text_file(p), p.string()); }

void write_atomic(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError(fmt::format("cannot write '{}'", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw ValidationError(fmt::format("failed writing '{}'", tmp.string()));
  }
  fs::rename(tmp, p);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

std::string sha256_file(const fs::path& p) { return sha256_hex(read_text_file(p)); }

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

}  // namespace

Manifest::Manifest(std::string command, std::vector<std::string> args, std::uint64_t seed) {
  doc_["command"] = std::move(command);
  doc_["args"] = std::move(args);
  doc_["root_seed"] = seed;
  doc_["tool_version"] = kToolVersion;
  doc_["inputs"] = nlohmann::json::array();
  doc_["outputs"] = nlohmann::json::array();
  doc_["timestamps"] = {{"started", utc_now()}};
}

void Manifest::add_input(const fs::path& p) {
  doc_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
}

void Manifest::add_output(const fs::path& p) { outputs_.push_back(p); }

void Manifest::write_pending(const fs::path& where) {
  nlohmann::json d = doc_;
  for (const auto& p : outputs_) d["outputs"].push_back({{"path", p.string()}, {"sha256", nullptr}});
  d["status"] = "running";
  write_atomic(where, d.dump(2) + "\n");
}

void Manifest::write_final(const fs::path& where) {
  nlohmann::json d = doc_;
  for (const auto& p : outputs_) d["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  d["status"] = "complete";
  d["timestamps"]["finished"] = utc_now();
  write_atomic(where, d.dump(2) + "\n");
}

}  // namespace wadc::cli
