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

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "wadc/cli.hpp"

using namespace wadc;
namespace fs = std::filesystem;

namespace {

int wadc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "wadc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wadc_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const fs::path& two_area_model() {
  static const fs::path p = [] {
    const fs::path dir = scratch("model");
    const fs::path out = dir / "two_area.json";
    REQUIRE(wadc_run({"model", "--builtin", "two-area", "--dt", "0.01", "-o", out.string()}) == cli::kOk);
    return out;
  }();
  return p;
}

}  // namespace

TEST_CASE("model bundle round trip and manifest", "[cli]") {
  const fs::path out = two_area_model();
  const nlohmann::json j = cli::read_json_file(out);
  const cli::ModelBundle b = cli::bundle_from_json(j);
  CHECK(b.sys.state_dim() == 16);
  CHECK(b.n_sg == 4);
  CHECK(b.network.has_value());
  CHECK(cli::bundle_to_json(b) == j);
  fs::path man = out;
  man += ".manifest.json";
  const nlohmann::json m = cli::read_json_file(man);
  CHECK(m.at("status") == "complete");
  CHECK(m.at("outputs")[0].at("sha256") == cli::sha256_file(out));
}

TEST_CASE("sha256 of a known string", "[cli]") {
  const fs::path dir = scratch("sha");
  write(dir / "abc.txt", "abc");
  CHECK(cli::sha256_file(dir / "abc.txt") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("malformed inputs exit with a validation error and no output", "[cli]") {
  const fs::path dir = scratch("bad");
  write(dir / "net.json", "{ \"buses\": [ ");
  CHECK(wadc_run({"model", "--network", (dir / "net.json").string(), "-o", (dir / "m.json").string()}) ==
        cli::kValidation);
  CHECK_FALSE(fs::exists(dir / "m.json"));
  CHECK(wadc_run({"model", "-o", (dir / "m.json").string()}) == cli::kUsage);
  CHECK(wadc_run({"frobnicate"}) == cli::kUsage);
}

TEST_CASE("sweep with an empty level list is a usage error", "[cli]") {
  const fs::path dir = scratch("sweep_empty");
  write(dir / "ck.json", "{}");
  CHECK(wadc_run({"sweep", "--model", two_area_model().string(), "--checkpoint", (dir / "ck.json").string(),
                  "--axis", "delay", "--levels", "", "-o", (dir / "out").string()}) == cli::kUsage);
  CHECK(wadc_run({"sweep", "--model", two_area_model().string(), "--checkpoint", (dir / "ck.json").string(),
                  "--axis", "wobble", "--levels", "0.1", "-o", (dir / "out").string()}) == cli::kUsage);
}

TEST_CASE("checkpoint of the wrong shape is rejected", "[cli]") {
  const fs::path dir = scratch("shape");
  cli::Checkpoint ck;
  ck.k = MatrixXd::Zero(2, 8);
  ck.mask = SparsityMask::full(2, 8, 4);
  write(dir / "ck.json", cli::checkpoint_to_json(ck).dump());
  CHECK(wadc_run({"eval", "--model", two_area_model().string(), "--checkpoint", (dir / "ck.json").string(),
                  "--scenarios", "2", "--horizon", "20", "-o", (dir / "out").string()}) == cli::kValidation);
}

TEST_CASE("train, eval, sweep and modes reproduce byte for byte", "[cli]") {
  const fs::path dir = scratch("repro");
  write(dir / "comm.json", R"({"areas": [1, 1, 2, 2, 1, 2], "area_links": [[1, 2]], "max_delay_s": 0.02, "seed": 9})");
  write(dir / "scenario.json", R"({"horizon": 100, "impulse_scale": 0.1, "noise": {"kind": "gaussian", "sigma": 0.05}})");
  auto train = [&](const std::string& out) {
    return wadc_run({"train", "--model", two_area_model().string(), "--comm", (dir / "comm.json").string(),
                     "--scenario", (dir / "scenario.json").string(), "--iters", "3", "--zopg-samples", "4",
                     "--eta", "1e-5", "--radius", "0.05", "--baseline", "-o", (dir / out).string()});
  };
  REQUIRE(train("t1") == cli::kOk);
  REQUIRE(train("t2") == cli::kOk);
  for (const char* f : {"trainlog.csv", "checkpoint.json", "moments.json"})
    CHECK(cli::sha256_file(dir / "t1" / f) == cli::sha256_file(dir / "t2" / f));
  const nlohmann::json man = cli::read_json_file(dir / "t1" / "manifest.json");
  CHECK(man.at("status") == "complete");
  CHECK(man.at("root_seed") == 9);
  CHECK(man.at("inputs").size() == 3);

  const std::string ck = (dir / "t1" / "checkpoint.json").string();
  auto sweep = [&](const std::string& out, const std::string& jobs) {
    return wadc_run({"sweep", "--model", two_area_model().string(), "--comm", (dir / "comm.json").string(),
                     "--scenario", (dir / "scenario.json").string(), "--checkpoint", ck, "--checkpoint", ck,
                     "--axis", "loss", "--levels", "0,0.1", "--scenarios", "4", "--jobs", jobs, "-o",
                     (dir / out).string()});
  };
  REQUIRE(sweep("s1", "0") == cli::kOk);
  REQUIRE(sweep("s2", "1") == cli::kOk);
  CHECK(cli::sha256_file(dir / "s1" / "sweep.csv") == cli::sha256_file(dir / "s2" / "sweep.csv"));
  CHECK(cli::sha256_file(dir / "s1" / "summary.json") == cli::sha256_file(dir / "s2" / "summary.json"));

  REQUIRE(wadc_run({"eval", "--model", two_area_model().string(), "--checkpoint", ck, "--scenario",
                    (dir / "scenario.json").string(), "--scenarios", "3", "-o", (dir / "e1").string()}) == cli::kOk);
  CHECK(fs::exists(dir / "e1" / "eval.csv"));

  REQUIRE(wadc_run({"modes", "--model", two_area_model().string(), "--checkpoint", ck, "-o",
                    (dir / "modes.csv").string()}) == cli::kOk);
  CHECK(cli::read_text_file(dir / "modes.csv").rfind("design,mode,freq_hz,damping", 0) == 0);
}

TEST_CASE("communication config parsing", "[cli]") {
  const cli::ModelBundle b = cli::bundle_from_json(cli::read_json_file(two_area_model()));
  const cli::CommConfig full = cli::comm_from_json(nlohmann::json::object(), b);
  CHECK(mask_from_graph(full.graph).count() == 96);
  const cli::CommConfig edges = cli::comm_from_json(
      nlohmann::json::parse(R"({"complete": false, "areas": {"G1": 1, "G2": 1, "G3": 2, "G4": 2, "V1": 1, "V2": 2},
                               "edges": [{"from": "G3", "to": "V1"}]})"),
      b);
  const SparsityMask m = mask_from_graph(edges.graph);
  CHECK(m.block(4, 2));
  CHECK_FALSE(m.block(4, 3));
  CHECK_THROWS(cli::comm_from_json(nlohmann::json::parse(R"({"edges": [{"from": "G9", "to": "V1"}]})"), b));
  CHECK_THROWS(cli::comm_from_json(nlohmann::json::parse(R"({"loss_p": 2})"), b));
}
