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

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <omp.h>

#include <iostream>
#include <sstream>

#include "wadc/cli.hpp"
#include "wadc/error.hpp"
#include "wadc/network_io.hpp"

namespace wadc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string node_name(int index, int n_sg) {
  return index < n_sg ? fmt::format("G{}", index + 1) : fmt::format("V{}", index - n_sg + 1);
}

int node_index(const std::string& name, int n_sg, int n_vsc) {
  if (name.size() >= 2 && (name[0] == 'G' || name[0] == 'V')) {
    int k = 0;
    try {
      k = std::stoi(name.substr(1));
    } catch (const std::exception&) {
      k = 0;
    }
    if (name[0] == 'G' && k >= 1 && k <= n_sg) return k - 1;
    if (name[0] == 'V' && k >= 1 && k <= n_vsc) return n_sg + k - 1;
  }
  throw ValidationError(fmt::format("unknown node '{}' (expected G1..G{} or V1..V{})", name, n_sg, n_vsc));
}

json modes_json(const std::vector<ModeReport>& modes) {
  json arr = json::array();
  for (const ModeReport& m : modes)
    arr.push_back({{"freq_hz", m.freq_hz},
                   {"damping", m.damping},
                   {"real", m.continuous.real()},
                   {"imag", m.continuous.imag()},
                   {"branch_warning", m.branch_warning}});
  return arr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Data files

ModelBundle bundle_from_network(const NetworkDescription& net, const OperatingPoint& op, double dt,
                                std::string source) {
  ModelBundle b;
  b.sys = discretize(build_continuous(net, op), dt);
  b.n_sg = net.n_sg();
  b.n_vsc = net.n_vsc();
  for (const Generator& g : net.generators) b.areas.push_back(net.buses[net.bus_index(g.bus)].area);
  for (const Vsc& v : net.vscs) b.areas.push_back(net.buses[net.bus_index(v.bus)].area);
  b.network = NetworkContext{net, op};
  b.source = std::move(source);
  return b;
}

json bundle_to_json(const ModelBundle& b) {
  json j;
  j["format"] = "wadc-model";
  j["version"] = 1;
  j["source"] = b.source;
  j["dt"] = b.sys.dt;
  j["n_sg"] = b.n_sg;
  j["n_vsc"] = b.n_vsc;
  j["n_blocks"] = b.sys.n_blocks;
  j["block_size"] = b.sys.block_size;
  j["state_order"] = b.n_sg > 0 ? state_names(b.n_sg) : std::vector<std::string>{};
  j["input_order"] = b.n_sg > 0 ? input_names(b.n_sg, b.n_vsc) : std::vector<std::string>{};
  j["areas"] = b.areas;
  std::vector<std::string> nodes;
  for (int i = 0; i < b.n_sg + b.n_vsc; ++i) nodes.push_back(node_name(i, b.n_sg));
  j["nodes"] = nodes;
  j["A"] = matrix_to_json(b.sys.a);
  j["B"] = matrix_to_json(b.sys.b);
  if (b.network) j["network"] = network_to_json(b.network->net, b.network->op);
  j["open_loop"] = {
      {"spectral_radius", spectral_radius(b.sys.a)},
      {"modes", modes_json(closed_loop_modes(b.sys, MatrixXd::Zero(b.sys.input_dim(), b.sys.state_dim()), 0.0,
                                             0.5 / b.sys.dt))}};
  return j;
}

ModelBundle bundle_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != "wadc-model")
    throw ValidationError("not a model bundle (missing \"format\": \"wadc-model\")");
  ModelBundle b;
  b.sys.a = matrix_from_json(j.at("A"), "A");
  b.sys.b = matrix_from_json(j.at("B"), "B");
  b.sys.dt = j.at("dt").get<double>();
  b.sys.n_blocks = j.at("n_blocks").get<int>();
  b.sys.block_size = j.at("block_size").get<int>();
  b.sys.validate();
  b.n_sg = j.value("n_sg", 0);
  b.n_vsc = j.value("n_vsc", 0);
  b.areas = j.value("areas", std::vector<int>{});
  b.source = j.value("source", std::string());
  if (j.contains("network")) {
    NetworkFile nf = network_from_json(j["network"]);
    b.network = NetworkContext{std::move(nf.net), std::move(nf.op)};
  }
  if (b.n_sg > 0 && (b.sys.state_dim() != 4 * b.n_sg || b.sys.input_dim() != b.n_sg + b.n_vsc))
    throw ValidationError("model bundle dimensions disagree with its generator and converter counts");
  return b;
}

CommConfig comm_from_json(const json& j, const ModelBundle& model) {
  if (!j.is_object()) throw ValidationError("communication config must be a JSON object");
  const int ng = model.n_sg, nv = model.n_vsc;
  if (ng == 0) throw ValidationError("communication graphs need a power-system model");
  CommConfig c;
  std::vector<int> areas = model.areas;
  if (j.contains("areas")) {
    const json& a = j["areas"];
    if (a.is_array()) {
      areas = a.get<std::vector<int>>();
    } else if (a.is_object()) {
      if (areas.size() != static_cast<std::size_t>(ng + nv)) areas.assign(ng + nv, 0);
      for (auto it = a.begin(); it != a.end(); ++it) areas[node_index(it.key(), ng, nv)] = it.value().get<int>();
    } else {
      throw ValidationError("\"areas\" must be an array or an object");
    }
  }
  std::vector<std::pair<int, int>> links;
  if (j.contains("area_links"))
    for (const json& l : j["area_links"]) {
      if (!l.is_array() || l.size() != 2) throw ValidationError("each area link must be a pair");
      links.emplace_back(l[0].get<int>(), l[1].get<int>());
    }
  if (j.value("complete", !j.contains("areas") && !j.contains("area_links")))
    c.graph = CommGraph::complete(ng, nv);
  else
    c.graph = CommGraph::from_areas(ng, nv, areas, links);
  c.graph.area = areas.size() == static_cast<std::size_t>(ng + nv) ? areas : std::vector<int>(ng + nv, 0);
  if (j.contains("edges"))
    for (const json& e : j["edges"]) {
      const int sg = node_index(e.at("from").get<std::string>(), ng, nv);
      const int ctrl = node_index(e.at("to").get<std::string>(), ng, nv);
      if (sg >= ng) throw ValidationError("edge sources must be generators");
      c.graph.set_link(sg, ctrl, e.value("on", true));
    }
  c.max_delay_s = j.value("max_delay_s", 0.0);
  c.loss_p = j.value("loss_p", 0.0);
  c.per_link_delay = j.value("per_link_delay", false);
  c.per_link_loss = j.value("per_link_loss", false);
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (!(c.max_delay_s >= 0.0)) throw ValidationError("max_delay_s must be nonnegative");
  PacketLossModel{c.loss_p, false}.validate();
  return c;
}

ScenarioFile scenario_from_json(const json& j, int state_dim) {
  if (!j.is_object()) throw ValidationError("scenario config must be a JSON object");
  ScenarioFile s;
  s.horizon = j.value("horizon", s.horizon);
  s.impulse_scale = j.value("impulse_scale", s.impulse_scale);
  s.impulse_indices = j.value("impulse_indices", std::vector<int>{});
  if (s.horizon < 1) throw ValidationError("horizon must be at least one step");
  if (j.contains("noise")) {
    const json& n = j["noise"];
    const std::string kind = n.value("kind", std::string("gaussian"));
    if (kind == "empirical") {
      const MatrixXd draws = matrix_from_json(n.at("samples"), "noise.samples");
      s.noise = NoiseModel::empirical(draws.transpose());
    } else if (kind == "gaussian") {
      if (n.contains("cov")) {
        const MatrixXd cov = matrix_from_json(n["cov"], "noise.cov");
        const VectorXd mean = n.contains("mean") ? vector_from_json(n["mean"], "noise.mean")
                                                 : VectorXd::Zero(cov.rows());
        s.noise = NoiseModel::gaussian(mean, cov);
      } else {
        std::vector<int> idx = n.value("indices", std::vector<int>{});
        if (idx.empty())
          for (int i = 1; i < state_dim; i += 4) idx.push_back(i);
        s.noise = NoiseModel::diagonal(state_dim, idx, n.value("sigma", 0.0));
      }
    } else {
      throw ValidationError(fmt::format("unknown noise kind '{}'", kind));
    }
    if (s.noise.dim() != state_dim) throw ValidationError("noise dimension does not match the model");
  }
  return s;
}

json checkpoint_to_json(const Checkpoint& c) {
  json j;
  j["format"] = "wadc-checkpoint";
  j["shape"] = {c.k.rows(), c.k.cols()};
  j["K"] = matrix_to_json(c.k);
  j["mask"] = matrix_to_json(c.mask.as_matrix());
  j["block_size"] = c.mask.block_size();
  j["iteration"] = c.iteration;
  j["root_seed"] = c.root_seed;
  j["moments"] = c.moments_ref;
  j["settings"] = c.settings;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != "wadc-checkpoint")
    throw ValidationError("not a checkpoint (missing \"format\": \"wadc-checkpoint\")");
  Checkpoint c;
  c.k = matrix_from_json(j.at("K"), "K");
  const MatrixXd m = matrix_from_json(j.at("mask"), "mask");
  if (m.rows() != c.k.rows() || m.cols() != c.k.cols()) throw ValidationError("checkpoint mask shape differs from K");
  c.mask = SparsityMask(static_cast<int>(m.rows()), static_cast<int>(m.cols()), j.value("block_size", 1));
  for (int r = 0; r < m.rows(); ++r)
    for (int col = 0; col < m.cols(); ++col) c.mask.set(r, col, m(r, col) != 0.0);
  if (!c.mask.admits(c.k)) throw ValidationError("checkpoint gain violates its own mask");
  c.iteration = j.value("iteration", 0);
  c.root_seed = j.value("root_seed", std::uint64_t{0});
  c.moments_ref = j.value("moments", std::string());
  c.settings = j.value("settings", json::object());
  return c;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Common {
  std::string model;
  std::string comm;
  std::string scenario;
  std::string moments;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int jobs = 0;
  std::string out;
  std::optional<double> noise_sigma, impulse, max_delay, loss_p;
  std::optional<int> horizon;
  int msfd_unit = -1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_comm) {
  cmd->add_option("--model", c.model, "Model bundle JSON")->required();
  if (needs_comm) {
    cmd->add_option("--comm", c.comm, "Communication config JSON");
    cmd->add_option("--scenario", c.scenario, "Scenario config JSON");
    cmd->add_option("--moments", c.moments, "Noise moments JSON (default: closed form from the scenario noise)");
    cmd->add_option("--noise-sigma", c.noise_sigma, "Std of the speed-state perturbation");
    cmd->add_option("--impulse", c.impulse, "Initial speed impulse bound");
    cmd->add_option("--horizon", c.horizon, "Steps per scenario");
    cmd->add_option("--max-delay", c.max_delay, "Maximum communication delay (s)");
    cmd->add_option("--loss-p", c.loss_p, "Packet loss probability");
    cmd->add_option("--msfd-unit", c.msfd_unit, "Generator index for frequency deviation (-1: mean of all)");
  }
  cmd->add_option("--seed", c.seed, "Root seed")->each([&c](const std::string&) { c.seed_given = true; });
  cmd->add_option("--jobs", c.jobs, "Worker threads (1 = serial, 0 = all cores)")->check(CLI::NonNegativeNumber);
}

struct Context {
  ModelBundle model;
  CommConfig comm;
  ScenarioTemplate tmpl;
  CostWeights weights;
  NoiseMoments moments;
  std::uint64_t seed = 1;
  Parallelism par = Parallelism::OpenMP;
  std::vector<fs::path> inputs;
};

Parallelism setup_jobs(int jobs) {
  if (jobs == 1) return Parallelism::Serial;
  if (jobs > 1) omp_set_num_threads(jobs);
  return Parallelism::OpenMP;
}

Context load_context(const Common& c) {
  Context ctx;
  ctx.model = bundle_from_json(read_json_file(c.model));
  ctx.inputs.push_back(c.model);
  const DiscreteSystem& sys = ctx.model.sys;
  if (!c.comm.empty()) {
    ctx.comm = comm_from_json(read_json_file(c.comm), ctx.model);
    ctx.inputs.push_back(c.comm);
  } else if (ctx.model.n_sg > 0) {
    ctx.comm.graph = CommGraph::complete(ctx.model.n_sg, ctx.model.n_vsc);
  }
  ScenarioFile sf;
  std::vector<int> speed;
  for (int i = 1; i < sys.state_dim(); i += 4) speed.push_back(i);
  sf.noise = NoiseModel::diagonal(sys.state_dim(), speed, 0.01);
  if (!c.scenario.empty()) {
    const json sj = read_json_file(c.scenario);
    ScenarioFile parsed = scenario_from_json(sj, sys.state_dim());
    if (!sj.contains("noise")) parsed.noise = sf.noise;
    sf = std::move(parsed);
    ctx.inputs.push_back(c.scenario);
  }
  if (c.noise_sigma) sf.noise = NoiseModel::diagonal(sys.state_dim(), speed, *c.noise_sigma);
  if (c.impulse) sf.impulse_scale = *c.impulse;
  if (c.horizon) sf.horizon = *c.horizon;
  if (sf.horizon < 1) throw ValidationError("horizon must be at least one step");

  ctx.tmpl.horizon = sf.horizon;
  ctx.tmpl.impulse_scale = sf.impulse_scale;
  ctx.tmpl.impulse_indices = sf.impulse_indices;
  ctx.tmpl.noise = sf.noise;
  ctx.tmpl.max_delay_s = c.max_delay.value_or(ctx.comm.max_delay_s);
  ctx.tmpl.per_link_delay = ctx.comm.per_link_delay;
  ctx.tmpl.loss = PacketLossModel{c.loss_p.value_or(ctx.comm.loss_p), ctx.comm.per_link_loss};
  ctx.tmpl.loss.validate();
  if (!(ctx.tmpl.max_delay_s >= 0.0)) throw ValidationError("maximum delay must be nonnegative");

  ctx.weights = CostWeights::identity(sys.state_dim(), sys.input_dim());
  if (!c.moments.empty()) {
    ctx.moments = moments_from_json(read_json_file(c.moments));
    ctx.inputs.push_back(c.moments);
    if (ctx.moments.dim() != sys.state_dim()) throw ValidationError("moments file does not match the model");
  } else {
    ctx.moments = compute_moments(ctx.tmpl.noise, ctx.weights.q);
  }
  ctx.seed = c.seed_given ? c.seed : ctx.comm.seed.value_or(c.seed);
  ctx.par = setup_jobs(c.jobs);
  return ctx;
}

Checkpoint load_checkpoint(const std::string& path, const ModelBundle& model) {
  Checkpoint ck = checkpoint_from_json(read_json_file(path));
  if (ck.k.rows() != model.sys.input_dim() || ck.k.cols() != model.sys.state_dim())
    throw ValidationError(fmt::format("checkpoint '{}' holds a {}x{} gain but the model needs {}x{}", path,
                                      ck.k.rows(), ck.k.cols(), model.sys.input_dim(), model.sys.state_dim()));
  return ck;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("cannot parse level '{}'", item));
    }
  }
  if (out.empty()) throw UsageError("--levels needs at least one value");
  return out;
}

fs::path output_dir(const std::string& out) {
  if (out.empty()) throw UsageError("an output location (-o) is required");
  fs::create_directories(out);
  return out;
}

std::vector<std::string> arg_vector(int argc, char** argv) { return {argv + 1, argv + argc}; }

// model ---------------------------------------------------------------------

struct ModelArgs {
  std::string builtin, network, inspect, out;
  double dt = 0.01;
};

int cmd_model(const ModelArgs& a, const std::vector<std::string>& args) {
  if (!a.inspect.empty()) {
    const ModelBundle b = bundle_from_json(read_json_file(a.inspect));
    fmt::print("source          {}\n", b.source.empty() ? "-" : b.source);
    fmt::print("states          {}\n", b.sys.state_dim());
    fmt::print("inputs          {}\n", b.sys.input_dim());
    fmt::print("generators      {}\nconverters      {}\n", b.n_sg, b.n_vsc);
    fmt::print("dt              {}\n", format_double(b.sys.dt));
    fmt::print("spectral radius {}\n", format_double(spectral_radius(b.sys.a)));
    return kOk;
  }
  if (a.builtin.empty() == a.network.empty()) throw UsageError("give exactly one of --builtin or --network");
  if (a.out.empty()) throw UsageError("an output file (-o) is required");
  if (!(a.dt > 0.0)) throw ValidationError("--dt must be positive");
  ModelBundle b;
  Manifest manifest("model", args, 0);
  if (!a.builtin.empty()) {
    const BuiltinSystem bs = builtin_system(a.builtin);
    b = bundle_from_network(bs.net, bs.op, a.dt, "builtin:" + bs.name);
  } else {
    NetworkFile nf = network_from_json(read_json_file(a.network));
    const double res = operating_point_residual(nf.net, nf.op);
    if (res > 1e-6)
      fmt::print(std::cerr, "warning: operating point residual {:.3e} exceeds 1e-6\n", res);
    b = bundle_from_network(nf.net, nf.op, a.dt, "file:" + fs::path(a.network).filename().string());
    manifest.add_input(a.network);
  }
  const fs::path out = a.out;
  fs::path mpath = out;
  mpath += ".manifest.json";
  manifest.add_output(out);
  manifest.write_pending(mpath);
  write_atomic(out, bundle_to_json(b).dump(2) + "\n");
  manifest.write_final(mpath);
  fmt::print("wrote {} ({} states, {} inputs)\n", out.string(), b.sys.state_dim(), b.sys.input_dim());
  for (const ModeReport& m :
       closed_loop_modes(b.sys, MatrixXd::Zero(b.sys.input_dim(), b.sys.state_dim()), 0.1, 2.0))
    fmt::print("  mode {:7.4f} Hz  damping {:8.4f}\n", m.freq_hz, m.damping);
  return kOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  Common common;
  double eta = 1e-4;
  int iters = 15000;
  int samples = 100;
  double radius = 0.1;
  double risk_c = 0.5;
  double lambda_max = 100.0;
  std::string risk = "on";
  std::string controllers = "all";
  std::string backend = "mc";
  int rollouts = 1;
  std::string moment_source = "nominal";
  int moment_refresh = 1000;
  int moment_rollouts = 20;
  double grad_clip = 1e6;
  bool baseline = false;
  int log_every = 1;
  std::string k0;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& args) {
  if (a.risk != "on" && a.risk != "off") throw UsageError("--risk must be on or off");
  if (a.controllers != "all" && a.controllers != "sg") throw UsageError("--controllers must be all or sg");
  if (a.backend != "mc" && a.backend != "analytic") throw UsageError("--backend must be mc or analytic");
  if (a.moment_source != "nominal" && a.moment_source != "effective")
    throw UsageError("--moment-source must be nominal or effective");
  const fs::path dir = output_dir(a.common.out);
  Context ctx = load_context(a.common);
  const DiscreteSystem& sys = ctx.model.sys;

  TrainProblem p;
  p.sys = &sys;
  p.weights = ctx.weights;
  p.moments = ctx.moments;
  if (ctx.model.n_sg > 0) {
    p.mask = mask_from_graph(ctx.comm.graph);
  } else {
    p.mask = SparsityMask::full(sys.input_dim(), sys.state_dim(), sys.block_size);
  }
  if (a.controllers == "sg")
    for (int l = ctx.model.n_sg; l < p.mask.rows(); ++l)
      for (int i = 0; i < p.mask.n_units(); ++i) p.mask.set_block(l, i, false);
  p.scenarios = ctx.tmpl;
  p.backend = a.backend == "mc" ? EvalBackend::MonteCarlo : EvalBackend::Analytic;
  p.rollouts = a.rollouts;
  p.parallel = ctx.par;

  TrainConfig tc;
  tc.eta = a.eta;
  tc.iters = a.iters;
  tc.seed = ctx.seed;
  tc.moment_refresh = a.moment_refresh;
  tc.moments = a.moment_source == "effective" ? MomentSource::Effective : MomentSource::Nominal;
  tc.moment_rollouts = a.moment_rollouts;
  tc.log_every = a.log_every;
  Manifest manifest("train", args, ctx.seed);
  if (!a.k0.empty()) {
    tc.k0 = load_checkpoint(a.k0, ctx.model).k;
    manifest.add_input(a.k0);
  }
  ZopgConfig z;
  z.radius = a.radius;
  z.samples = a.samples;
  z.baseline = a.baseline;
  z.grad_clip = a.grad_clip;
  RiskConfig rc;
  rc.c = a.risk_c;
  rc.lambda_max = a.risk == "on" ? a.lambda_max : 0.0;

  for (const auto& in : ctx.inputs) manifest.add_input(in);
  const fs::path ck_path = dir / "checkpoint.json", log_path = dir / "trainlog.csv",
                 mom_path = dir / "moments.json", man_path = dir / "manifest.json";
  manifest.add_output(ck_path);
  manifest.add_output(log_path);
  manifest.add_output(mom_path);
  manifest.write_pending(man_path);

  const TrainLog log = train(p, tc, z, rc);

  Checkpoint ck;
  ck.k = log.k_final;
  ck.mask = p.mask;
  ck.iteration = a.iters;
  ck.root_seed = ctx.seed;
  ck.moments_ref = "moments.json";
  ck.settings = {{"eta", a.eta},           {"iters", a.iters},         {"zopg_samples", a.samples},
                 {"radius", a.radius},     {"risk", a.risk},           {"risk_c", a.risk_c},
                 {"lambda_max", rc.lambda_max}, {"controllers", a.controllers}, {"backend", a.backend},
                 {"rollouts", a.rollouts}, {"baseline", a.baseline},   {"grad_clip", a.grad_clip},
                 {"moment_source", a.moment_source}};
  write_atomic(ck_path, checkpoint_to_json(ck).dump(2) + "\n");
  std::ostringstream csv;
  write_trainlog_csv(csv, log);
  write_atomic(log_path, csv.str());
  write_atomic(mom_path, moments_to_json(log.moments, rc.c, ctx.weights.q, "checkpoint.json").dump(2) + "\n");
  manifest.write_final(man_path);

  const double rho = spectral_radius(sys.a - sys.b * log.k_final);
  if (!log.entries.empty())
    fmt::print("final phi {:.6g}  rc {:.6g}  lambda share {:.2f}\n", log.entries.back().phi,
               log.entries.back().rc_est, log.entries.back().lambda_frac);
  fmt::print("closed-loop spectral radius {:.6f}\n", rho);
  if (!(rho < 1.0)) {
    fmt::print(std::cerr, "error: trained gain does not stabilize the undelayed loop\n");
    return kDivergence;
  }
  return kOk;
}

// eval / sweep ----------------------------------------------------------------

SweepSetup sweep_setup(const Context& ctx, int msfd_unit) {
  SweepSetup s;
  s.sys = &ctx.model.sys;
  s.weights = ctx.weights;
  s.moments = ctx.moments;
  s.scenarios = ctx.tmpl;
  s.network = ctx.model.network;
  s.msfd_unit = ctx.model.n_sg > 0 ? msfd_unit : -1;
  s.parallel = ctx.par;
  if (ctx.model.n_sg > 0 && msfd_unit >= ctx.model.n_sg) throw ValidationError("--msfd-unit out of range");
  return s;
}

struct EvalArgs {
  Common common;
  std::vector<std::string> checkpoints;
  int scenarios = 100;
  std::string axis;
  std::string levels;
};

int write_sweep(const fs::path& dir, const SweepResult& r, Manifest& manifest, const std::string& csv_name) {
  const fs::path csv_path = dir / csv_name, sum_path = dir / "summary.json", man_path = dir / "manifest.json";
  manifest.add_output(csv_path);
  manifest.add_output(sum_path);
  manifest.write_pending(man_path);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  write_atomic(csv_path, csv.str());
  write_atomic(sum_path, sweep_summary_json(r).dump(2) + "\n");
  manifest.write_final(man_path);
  for (const SweepStats& s : r.stats)
    fmt::print("level {:<8g} design {}  objective mean {:.6g} var {:.6g} max {:.6g}  msfd mean {:.6g}{}\n", s.level,
               s.design, s.objective.mean, s.objective.variance, s.objective.max, s.msfd.mean,
               s.excluded + s.diverged > 0 ? fmt::format("  (excluded {}, diverged {})", s.excluded, s.diverged)
                                           : std::string());
  return kOk;
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& args) {
  if (a.scenarios < 1) throw UsageError("--scenarios must be positive");
  const fs::path dir = output_dir(a.common.out);
  Context ctx = load_context(a.common);
  const Checkpoint ck = load_checkpoint(a.checkpoints.front(), ctx.model);
  Manifest manifest("eval", args, ctx.seed);
  for (const auto& in : ctx.inputs) manifest.add_input(in);
  manifest.add_input(a.checkpoints.front());
  const SweepResult r = scenario_sweep(sweep_setup(ctx, a.common.msfd_unit), {ck.k}, SweepAxis::Delay,
                                       {ctx.tmpl.max_delay_s}, a.scenarios, ctx.seed);
  return write_sweep(dir, r, manifest, "eval.csv");
}

int cmd_sweep(const EvalArgs& a, const std::vector<std::string>& args) {
  if (a.scenarios < 1) throw UsageError("--scenarios must be positive");
  const std::vector<double> levels = parse_levels(a.levels);
  SweepAxis axis;
  try {
    axis = parse_axis(a.axis);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = output_dir(a.common.out);
  Context ctx = load_context(a.common);
  Manifest manifest("sweep", args, ctx.seed);
  for (const auto& in : ctx.inputs) manifest.add_input(in);
  std::vector<MatrixXd> designs;
  for (const std::string& p : a.checkpoints) {
    designs.push_back(load_checkpoint(p, ctx.model).k);
    manifest.add_input(p);
  }
  const SweepResult r = scenario_sweep(sweep_setup(ctx, a.common.msfd_unit), designs, axis, levels, a.scenarios, ctx.seed);
  return write_sweep(dir, r, manifest, "sweep.csv");
}

// modes -----------------------------------------------------------------------

struct ModesArgs {
  std::string model;
  std::vector<std::string> checkpoints;
  std::string band = "0.1,2";
  std::string out;
};

int cmd_modes(const ModesArgs& a, const std::vector<std::string>& args) {
  const ModelBundle model = bundle_from_json(read_json_file(a.model));
  const std::vector<double> band = parse_levels(a.band);
  if (band.size() != 2 || band[0] > band[1]) throw UsageError("--band needs two increasing values lo,hi");
  std::vector<MatrixXd> designs;
  Manifest manifest("modes", args, 0);
  manifest.add_input(a.model);
  if (a.checkpoints.empty()) designs.push_back(MatrixXd::Zero(model.sys.input_dim(), model.sys.state_dim()));
  for (const std::string& p : a.checkpoints) {
    designs.push_back(load_checkpoint(p, model).k);
    manifest.add_input(p);
  }
  std::ostringstream csv;
  csv << "design,mode,freq_hz,damping,real,imag,branch_warning\n";
  fmt::print("{:>6} {:>4} {:>10} {:>10} {:>12} {:>12}\n", "design", "mode", "freq_hz", "damping", "real", "imag");
  for (std::size_t d = 0; d < designs.size(); ++d) {
    const auto modes = closed_loop_modes(model.sys, designs[d], band[0], band[1]);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const ModeReport& m = modes[i];
      fmt::print(csv, "{},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", d, i, m.freq_hz, m.damping, m.continuous.real(),
                 m.continuous.imag(), m.branch_warning ? 1 : 0);
      fmt::print("{:>6} {:>4} {:>10.4f} {:>10.4f} {:>12.5f} {:>12.5f}{}\n", d, i, m.freq_hz, m.damping,
                 m.continuous.real(), m.continuous.imag(), m.branch_warning ? "  (branch)" : "");
    }
  }
  if (!a.out.empty()) {
    const fs::path out = a.out;
    fs::path mpath = out;
    mpath += ".manifest.json";
    manifest.add_output(out);
    manifest.write_pending(mpath);
    write_atomic(out, csv.str());
    manifest.write_final(mpath);
  }
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Risk-constrained wide-area damping control toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ModelArgs ma;
  auto* model = app.add_subcommand("model", "Build or inspect a discrete model bundle");
  model->add_option("--builtin", ma.builtin, "Built-in system: two-area or ring(Ng,Nv,seed)");
  model->add_option("--network", ma.network, "Network description JSON");
  model->add_option("--dt", ma.dt, "Time step (s)");
  model->add_option("--inspect", ma.inspect, "Summarize an existing bundle");
  model->add_option("-o,--output", ma.out, "Output bundle path");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train a structured gain with SGDmax");
  add_common(trn, ta.common, true);
  trn->add_option("-o,--output", ta.common.out, "Output directory")->required();
  trn->add_option("--eta", ta.eta, "Step size");
  trn->add_option("--iters", ta.iters, "Iterations")->check(CLI::NonNegativeNumber);
  trn->add_option("--zopg-samples", ta.samples, "Gradient samples per iteration")->check(CLI::PositiveNumber);
  trn->add_option("--radius", ta.radius, "Smoothing radius");
  trn->add_option("--risk-c", ta.risk_c, "Risk tolerance c");
  trn->add_option("--lambda-max", ta.lambda_max, "Multiplier bound");
  trn->add_option("--risk", ta.risk, "on: risk-constrained, off: risk-neutral");
  trn->add_option("--controllers", ta.controllers, "all: generators and converters, sg: generators only");
  trn->add_option("--backend", ta.backend, "mc (rollouts) or analytic (undelayed Lyapunov)");
  trn->add_option("--rollouts", ta.rollouts, "Rollouts per evaluation (mc backend)")->check(CLI::PositiveNumber);
  trn->add_option("--moment-source", ta.moment_source, "nominal or effective");
  trn->add_option("--moment-refresh", ta.moment_refresh, "Iterations between effective-moment updates");
  trn->add_option("--moment-rollouts", ta.moment_rollouts, "Rollouts per effective-moment estimate");
  trn->add_option("--grad-clip", ta.grad_clip, "Gradient norm cap");
  trn->add_flag("--baseline", ta.baseline, "Subtract Phi(K) inside the estimator");
  trn->add_option("--log-every", ta.log_every, "Log cadence")->check(CLI::PositiveNumber);
  trn->add_option("--k0", ta.k0, "Start from this checkpoint");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate one design over seeded scenarios");
  add_common(ev, ea.common, true);
  ev->add_option("-o,--output", ea.common.out, "Output directory")->required();
  ev->add_option("--checkpoint", ea.checkpoints, "Checkpoint JSON")->required()->expected(1);
  ev->add_option("--scenarios", ea.scenarios, "Scenario count");

  EvalArgs sa;
  auto* sw = app.add_subcommand("sweep", "Scenario sweep over delay, loss, risk-c or op-perturb levels");
  add_common(sw, sa.common, true);
  sw->add_option("-o,--output", sa.common.out, "Output directory")->required();
  sw->add_option("--checkpoint", sa.checkpoints, "Checkpoint JSON (repeat per design)")->required();
  sw->add_option("--axis", sa.axis, "delay, loss, risk-c or op-perturb")->required();
  sw->add_option("--levels", sa.levels, "Comma-separated levels")->required();
  sw->add_option("--scenarios", sa.scenarios, "Scenarios per level and design");

  ModesArgs mo;
  auto* md = app.add_subcommand("modes", "Closed-loop modes and damping ratios");
  md->add_option("--model", mo.model, "Model bundle JSON")->required();
  md->add_option("--checkpoint", mo.checkpoints, "Checkpoint JSON (repeat per design; none: open loop)");
  md->add_option("--band", mo.band, "Frequency band lo,hi in Hz");
  md->add_option("-o,--output", mo.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const std::vector<std::string> args = arg_vector(argc, argv);
  try {
    if (*model) return cmd_model(ma, args);
    if (*trn) return cmd_train(ta, args);
    if (*ev) return cmd_eval(ea, args);
    if (*sw) return cmd_sweep(sa, args);
    if (*md) return cmd_modes(mo, args);
  } catch (const UsageError& e) {
    fmt::print(std::cerr, "usage error: {}\n", e.what());
    return kUsage;
  } catch (const InfeasibleStart& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kValidation;
  } catch (const DivergenceError& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kDivergence;
  } catch (const Error& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kValidation;
  } catch (const json::exception& e) {
    fmt::print(std::cerr, "error: malformed input: {}\n", e.what());
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kValidation;
  }
  return kUsage;
}

}  // namespace wadc::cli
