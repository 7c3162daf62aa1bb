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

#include <random>

#include "wadc/comms.hpp"
#include "wadc/netmodel.hpp"
#include "wadc/seed.hpp"

namespace wadc::testing {

inline MatrixXd random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

/// Random A with spectral radius `rho`.
inline MatrixXd random_stable(int n, Rng& rng, double rho) {
  MatrixXd a = random_matrix(n, n, rng);
  return a * (rho / spectral_radius(a));
}

inline MatrixXd random_spd(int n, Rng& rng, double floor = 0.1) {
  const MatrixXd g = random_matrix(n, n, rng);
  return g * g.transpose() / n + floor * MatrixXd::Identity(n, n);
}

/// sum_t A^t W A'^t truncated once the terms stop contributing.
inline MatrixXd lyapunov_series(const MatrixXd& a, const MatrixXd& w) {
  MatrixXd sum = w, term = w;
  for (int t = 0; t < 100000; ++t) {
    term = a * term * a.transpose();
    sum += term;
    if (term.norm() < 1e-18 * sum.norm()) break;
  }
  return sum;
}

inline const DiscreteSystem& two_area() {
  static const DiscreteSystem sys = [] {
    const BuiltinSystem bs = builtin_system("two-area");
    return discretize(build_continuous(bs.net, bs.op), 0.01);
  }();
  return sys;
}

/// Two-area sparse pattern: SG controllers see every unit, each VSC
/// controller sees only the generators of its own area.
inline CommGraph vsc_local_graph() {
  CommGraph g = CommGraph::complete(4, 2);
  for (int i : {2, 3}) g.set_link(i, 4, false);
  for (int i : {0, 1}) g.set_link(i, 5, false);
  return g;
}

}  // namespace wadc::testing
