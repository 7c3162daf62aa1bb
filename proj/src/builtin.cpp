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

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <random>
#include <regex>
#include <string>

#include "wadc/error.hpp"
#include "wadc/netmodel.hpp"
#include "wadc/seed.hpp"

namespace wadc {

namespace {

// Machine data on a 100 MVA base. Inertia is divided by the synchronous
// speed because the swing row integrates the speed deviation in rad/s.
constexpr double kSyncSpeed = 2.0 * std::numbers::pi * 60.0;

SgParams machine(double h_machine_base, double mva) {
  const double ratio = mva / 100.0;
  SgParams p;
  p.inertia = h_machine_base * ratio / kSyncSpeed;
  p.damping = 0.2;
  p.xd = 1.8 / ratio;
  p.xd_prime = 0.3 / ratio;
  p.td0_prime = 8.0;
  p.ta = 0.05;
  p.ka = 50.0;
  return p;
}

Branch line(int from, int to, double km, int circuits) {
  // 230 kV line, r = 0.0001 and x = 0.001 pu per km; charging is neglected.
  const double r = 0.0001 * km / circuits;
  const double x = 0.001 * km / circuits;
  const double den = r * r + x * x;
  return {from, to, r / den, -x / den};
}

Branch transformer(int from, int to, double x) { return {from, to, 0.0, -1.0 / x}; }

BuiltinSystem two_area() {
  BuiltinSystem sys;
  sys.name = "two-area";
  NetworkDescription& net = sys.net;
  const int areas[11] = {1, 1, 2, 2, 1, 1, 1, 2, 2, 2, 2};
  for (int id = 1; id <= 11; ++id) net.buses.push_back({id, areas[id - 1], 0.0, 0.0});
  // Constant-impedance loads with shunt compensation at buses 7 and 9.
  net.buses[6].g_shunt = 9.67;
  net.buses[6].b_shunt = 1.0;
  net.buses[8].g_shunt = 17.67;
  net.buses[8].b_shunt = 2.5;

  const double xt = 0.15 / 9.0;
  net.branches = {transformer(1, 5, xt), transformer(2, 6, xt), transformer(3, 11, xt),
                  transformer(4, 10, xt), line(5, 6, 25, 1),      line(6, 7, 10, 1),
                  line(7, 8, 110, 2),      line(8, 9, 110, 2),     line(9, 10, 10, 1),
                  line(10, 11, 25, 1)};

  const double h[4] = {6.5, 6.5, 6.175, 6.175};
  for (int i = 0; i < 4; ++i) {
    Generator g{i + 1, machine(h[i], 900.0)};
    g.params.pm = 6.5;
    net.generators.push_back(g);
  }
  net.vscs = {{7, 2.0, 0.0}, {9, 2.0, 0.0}};

  OperatingPoint guess;
  guess.e = (VectorXd(4) << 1.10, 1.08, 1.10, 1.08).finished();
  guess.delta = (VectorXd(4) << 0.3, 0.2, -0.1, -0.2).finished();
  guess.v = VectorXd::Ones(2);
  guess.theta = (VectorXd(2) << 0.0, -0.2).finished();
  sys.op = settle_operating_point(net, guess);
  return sys;
}

// Hub buses 1..Ng on a ring, generator terminal buses Ng+1..2Ng, converters
// on hubs spread evenly. Two consecutive hubs form an area.
BuiltinSystem ring(int ng, int nv, std::uint64_t seed) {
  if (ng < 2 || nv < 0 || nv > ng)
    throw ValidationError("ring(Ng, Nv, seed) requires Ng >= 2 and 0 <= Nv <= Ng");
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(ng), static_cast<std::uint64_t>(nv)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  BuiltinSystem sys;
  sys.name = fmt::format("ring({},{},{})", ng, nv, seed);
  NetworkDescription& net = sys.net;
  double total_load = 0.0;
  for (int k = 0; k < ng; ++k) {
    Bus hub{k + 1, k / 2 + 1, 2.0 + 2.0 * unit(rng), 0.3};
    total_load += hub.g_shunt;
    net.buses.push_back(hub);
  }
  for (int k = 0; k < ng; ++k) net.buses.push_back({ng + k + 1, k / 2 + 1, 0.0, 0.0});

  for (int k = 0; k < ng; ++k) {
    if (ng == 2 && k == 1) break;  // a two-node ring is a single line
    const double x = 0.02 + 0.04 * unit(rng);
    const double r = 0.1 * x;
    const double den = r * r + x * x;
    net.branches.push_back({k + 1, (k + 1) % ng + 1, r / den, -x / den});
  }
  for (int k = 0; k < ng; ++k) net.branches.push_back(transformer(ng + k + 1, k + 1, 0.15 / 9.0));

  const double vsc_p = 0.8;
  for (int j = 0; j < nv; ++j) net.vscs.push_back({j * ng / nv + 1, vsc_p, 0.0});
  const double share = (total_load - nv * vsc_p) / ng;
  for (int k = 0; k < ng; ++k) {
    Generator g{ng + k + 1, machine(5.5 + 2.0 * unit(rng), 900.0)};
    g.params.damping = 0.15 + 0.1 * unit(rng);
    g.params.pm = share;
    net.generators.push_back(g);
  }

  OperatingPoint guess;
  guess.e = VectorXd::Constant(ng, 1.08);
  guess.delta = VectorXd::Constant(ng, 0.1);
  guess.v = VectorXd::Ones(nv);
  guess.theta = VectorXd::Zero(nv);
  sys.op = settle_operating_point(net, guess);
  return sys;
}

}  // namespace

BuiltinSystem builtin_system(std::string_view name) {
  const std::string s(name);
  if (s == "two-area") return two_area();
  static const std::regex ring_re(R"(\s*ring\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)\s*)");
  std::smatch m;
  if (std::regex_match(s, m, ring_re))
    return ring(std::stoi(m[1]), std::stoi(m[2]), std::stoull(m[3]));
  throw ValidationError(fmt::format("unknown builtin system '{}'", s));
}

}  // namespace wadc
