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

#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "wadc/analysis.hpp"
#include "wadc/sgdmax.hpp"

namespace wadc::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kUsage = 2, kValidation = 3, kDivergence = 4 };

/// Entry point of the `wadc` tool.
int run(int argc, char** argv);

/// Discrete model plus the metadata the other commands need.
struct ModelBundle {
  DiscreteSystem sys;
  int n_sg = 0;
  int n_vsc = 0;
  std::vector<int> areas;  // SGs then VSCs
  std::optional<NetworkContext> network;
  std::string source;
};

nlohmann::json bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const nlohmann::json& j);
ModelBundle bundle_from_network(const NetworkDescription& net, const OperatingPoint& op, double dt,
                                std::string source);

/// Communication settings: graph, delay bound, loss probability, seed.
struct CommConfig {
  CommGraph graph;
  double max_delay_s = 0.0;
  double loss_p = 0.0;
  bool per_link_delay = false;
  bool per_link_loss = false;
  std::optional<std::uint64_t> seed;
};

/// `areas` (node name -> area, or an array), `area_links` ([[a, b], ...]),
/// `edges` overrides ({"from": "G1", "to": "V2", "on": true}), `complete`,
/// `max_delay_s`, `loss_p`, `seed`. Nodes are named G1.. and V1...
CommConfig comm_from_json(const nlohmann::json& j, const ModelBundle& model);

/// Horizon, impulse and noise settings of the scenario family.
struct ScenarioFile {
  int horizon = 2000;
  double impulse_scale = 0.1;
  std::vector<int> impulse_indices;
  NoiseModel noise;
};

/// `horizon`, `impulse_scale`, `impulse_indices`, and `noise` as
/// {"kind": "gaussian", "sigma": s, "indices": [...]} or
/// {"kind": "gaussian", "mean": [...], "cov": [[...]]} or
/// {"kind": "empirical", "samples": [[...] per draw]}.
ScenarioFile scenario_from_json(const nlohmann::json& j, int state_dim);

struct Checkpoint {
  MatrixXd k;
  SparsityMask mask;
  int iteration = 0;
  std::uint64_t root_seed = 0;
  std::string moments_ref;
  nlohmann::json settings;
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// File helpers.
std::string read_text_file(const std::filesystem::path& p);
nlohmann::json read_json_file(const std::filesystem::path& p);
/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& p, const std::string& content);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& p);
std::string format_double(double v);

/// Run manifest: written before the results with input digests, then
/// rewritten with output digests once every result file exists.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args, std::uint64_t seed);
  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  void write_pending(const std::filesystem::path& where);
  void write_final(const std::filesystem::path& where);

 private:
  nlohmann::json doc_;
  std::vector<std::filesystem::path> outputs_;
};

}  // namespace wadc::cli
