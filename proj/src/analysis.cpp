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

#include "wadc/analysis.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "wadc/error.hpp"

namespace wadc {

ModeReport mode_from_continuous(std::complex<double> lc) {
  ModeReport m;
  m.continuous = lc;
  const double sigma = lc.real();
  const double omega = std::abs(lc.imag());
  m.freq_hz = omega / (2.0 * std::numbers::pi);
  const double mag = std::hypot(sigma, omega);
  if (omega == 0.0)
    m.damping = sigma < 0.0 ? 1.0 : (sigma > 0.0 ? -1.0 : 0.0);
  else
    m.damping = -sigma / mag;
  return m;
}

ModeReport mode_from_discrete(std::complex<double> ld, double dt) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  ModeReport m;
  if (std::abs(ld) == 0.0) {
    m = mode_from_continuous({-std::numeric_limits<double>::infinity(), 0.0});
    m.damping = 1.0;
  } else {
    m = mode_from_continuous(std::log(ld) / dt);
  }
  m.discrete = ld;
  m.branch_warning = ld.imag() == 0.0 && ld.real() < 0.0;
  return m;
}

std::vector<ModeReport> closed_loop_modes(const DiscreteSystem& sys, const MatrixXd& k, double lo_hz,
                                          double hi_hz) {
  if (k.rows() != sys.input_dim() || k.cols() != sys.state_dim())
    throw ValidationError("gain shape does not match the system");
  Eigen::EigenSolver<MatrixXd> es(sys.a - sys.b * k, false);
  std::vector<ModeReport> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const std::complex<double> ld = es.eigenvalues()(i);
    if (ld.imag() < 0.0) continue;
    ModeReport m = mode_from_discrete(ld, sys.dt);
    if (m.freq_hz >= lo_hz && m.freq_hz <= hi_hz) out.push_back(m);
  }
  std::stable_sort(out.begin(), out.end(), [](const ModeReport& a, const ModeReport& b) {
    if (a.freq_hz != b.freq_hz) return a.freq_hz < b.freq_hz;
    return a.damping < b.damping;
  });
  return out;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cannot summarize an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  auto quantile = [&](double p) {
    const double h = (static_cast<double>(n) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return v[n - 1];
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
  };
  Summary s;
  s.count = n;
  s.min = v.front();
  s.max = v.back();
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  s.mean = compensated_mean(values);
  if (n > 1) {
    CompensatedSum ss;
    for (double x : values) ss.add((x - s.mean) * (x - s.mean));
    s.variance = ss.value() / static_cast<double>(n - 1);
  }
  return s;
}

nlohmann::json summary_to_json(const Summary& s) {
  return {{"count", s.count}, {"median", s.median}, {"q1", s.q1},     {"q3", s.q3},
          {"min", s.min},     {"max", s.max},       {"mean", s.mean}, {"variance", s.variance}};
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "delay") return SweepAxis::Delay;
  if (name == "loss") return SweepAxis::Loss;
  if (name == "risk-c") return SweepAxis::RiskC;
  if (name == "op-perturb") return SweepAxis::OpPerturb;
  throw ValidationError(fmt::format("unknown sweep axis '{}' (expected delay, loss, risk-c or op-perturb)", name));
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Delay: return "delay";
    case SweepAxis::Loss: return "loss";
    case SweepAxis::RiskC: return "risk-c";
    case SweepAxis::OpPerturb: return "op-perturb";
  }
  return "?";
}

namespace {

std::optional<DiscreteSystem> perturbed_system(const NetworkContext& ctx, double level, double dt,
                                               std::uint64_t seed) {
  NetworkDescription net = ctx.net;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Vsc& v : net.vscs) v.p *= 1.0 + level * unit(rng);
  try {
    const OperatingPoint op = settle_operating_point(net, ctx.op);
    return discretize(build_continuous(net, op), dt);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

SweepResult scenario_sweep(const SweepSetup& setup, const std::vector<MatrixXd>& designs, SweepAxis axis,
                           const std::vector<double>& levels, int n_scenarios, std::uint64_t root) {
  if (setup.sys == nullptr) throw ValidationError("sweep has no system");
  if (levels.empty()) throw ValidationError("sweep needs at least one level");
  if (designs.empty()) throw ValidationError("sweep needs at least one design");
  if (n_scenarios < 1) throw ValidationError("sweep needs at least one scenario");
  const DiscreteSystem& sys = *setup.sys;
  for (const MatrixXd& k : designs)
    if (k.rows() != sys.input_dim() || k.cols() != sys.state_dim())
      throw ValidationError("design gain shape does not match the system");
  if (axis == SweepAxis::RiskC && designs.size() != levels.size())
    throw ValidationError("the risk-c axis needs one design per level");
  if (axis == SweepAxis::OpPerturb && !setup.network)
    throw ValidationError("the op-perturb axis needs the network description");
  for (double l : levels)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("sweep levels must be finite and nonnegative");

  const int n_levels = static_cast<int>(levels.size());
  const int n_designs = static_cast<int>(designs.size());

  // Perturbed models are shared by every design at a given (level, scenario).
  std::vector<std::optional<DiscreteSystem>> models;
  if (axis == SweepAxis::OpPerturb) {
    models.resize(static_cast<std::size_t>(n_levels) * n_scenarios);
    auto build = [&](int idx) {
      const int li = idx / n_scenarios, s = idx % n_scenarios;
      models[idx] = perturbed_system(*setup.network, levels[li], sys.dt,
                                     derive_seed(root, {static_cast<std::uint64_t>(s), stream::kOperatingPoint}));
    };
    const int total = n_levels * n_scenarios;
    if (setup.parallel == Parallelism::OpenMP) {
#pragma omp parallel for schedule(dynamic)
      for (int idx = 0; idx < total; ++idx) build(idx);
    } else {
      for (int idx = 0; idx < total; ++idx) build(idx);
    }
  }

  struct Task {
    int level, design, scenario;
  };
  std::vector<Task> tasks;
  for (int li = 0; li < n_levels; ++li)
    for (int d = 0; d < n_designs; ++d) {
      if (axis == SweepAxis::RiskC && d != li) continue;
      for (int s = 0; s < n_scenarios; ++s) tasks.push_back({li, d, s});
    }

  std::vector<std::optional<ScenarioResult>> results(tasks.size());
  auto run = [&](std::size_t ti) {
    const Task& t = tasks[ti];
    const DiscreteSystem* model = &sys;
    if (axis == SweepAxis::OpPerturb) {
      const auto& m = models[static_cast<std::size_t>(t.level) * n_scenarios + t.scenario];
      if (!m) return;
      model = &*m;
    }
    ScenarioTemplate tmpl = setup.scenarios;
    if (axis == SweepAxis::Delay) tmpl.max_delay_s = levels[t.level];
    if (axis == SweepAxis::Loss) tmpl.loss.p = levels[t.level];
    const ScenarioConfig cfg = make_scenario(tmpl, *model, root, static_cast<std::uint64_t>(t.scenario));
    results[ti] = evaluate_scenario(*model, designs[t.design], cfg, setup.weights, setup.moments, setup.msfd_unit);
  };
  const auto n_tasks = static_cast<std::ptrdiff_t>(tasks.size());
  if (setup.parallel == Parallelism::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ti = 0; ti < n_tasks; ++ti) run(static_cast<std::size_t>(ti));
  } else {
    for (std::ptrdiff_t ti = 0; ti < n_tasks; ++ti) run(static_cast<std::size_t>(ti));
  }

  SweepResult out;
  out.axis = axis;
  std::vector<std::size_t> order(tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = levels[tasks[a].level], lb = levels[tasks[b].level];
    if (la != lb) return la < lb;
    if (tasks[a].level != tasks[b].level) return tasks[a].level < tasks[b].level;
    if (tasks[a].design != tasks[b].design) return tasks[a].design < tasks[b].design;
    return tasks[a].scenario < tasks[b].scenario;
  });

  std::size_t i = 0;
  while (i < order.size()) {
    const Task& head = tasks[order[i]];
    SweepStats st;
    st.level = levels[head.level];
    st.design = head.design;
    std::vector<double> obj, sc, rs, fq;
    for (; i < order.size() && tasks[order[i]].level == head.level && tasks[order[i]].design == head.design; ++i) {
      const Task& t = tasks[order[i]];
      const auto& r = results[order[i]];
      if (!r) {
        ++st.excluded;
        continue;
      }
      out.records.push_back({levels[t.level], t.design, t.scenario, *r});
      if (r->diverged) {
        ++st.diverged;
        continue;
      }
      obj.push_back(r->objective);
      sc.push_back(r->state_cost);
      rs.push_back(r->risk_sample);
      fq.push_back(r->msfd);
    }
    if (!obj.empty()) {
      st.objective = summarize(obj);
      st.state_cost = summarize(sc);
      st.risk_sample = summarize(rs);
      st.msfd = summarize(fq);
    }
    out.stats.push_back(st);
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "level,design,scenario,objective,state_cost,risk_sample,msfd\n";
  for (const SweepRecord& rec : r.records)
    fmt::print(os, "{:.17g},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", rec.level, rec.design, rec.scenario,
               rec.result.objective, rec.result.state_cost, rec.result.risk_sample, rec.result.msfd);
}

nlohmann::json sweep_summary_json(const SweepResult& r) {
  nlohmann::json j;
  j["axis"] = axis_name(r.axis);
  j["groups"] = nlohmann::json::array();
  for (const SweepStats& s : r.stats) {
    j["groups"].push_back({{"level", s.level},
                           {"design", s.design},
                           {"excluded", s.excluded},
                           {"diverged", s.diverged},
                           {"objective", summary_to_json(s.objective)},
                           {"state_cost", summary_to_json(s.state_cost)},
                           {"risk_sample", summary_to_json(s.risk_sample)},
                           {"msfd", summary_to_json(s.msfd)}});
  }
  return j;
}

}  // namespace wadc
