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

#include <cmath>
#include <numbers>
#include <sstream>

#include "support.hpp"
#include "wadc/risklqr.hpp"
#include "wadc/sim.hpp"

using namespace wadc;
using namespace wadc::testing;

namespace {

DiscreteSystem scalar(double a, double b) {
  return DiscreteSystem::generic(MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, b));
}

ScenarioConfig quiet(int n, int horizon, double x0) {
  ScenarioConfig cfg;
  cfg.horizon = horizon;
  cfg.x0 = VectorXd::Constant(n, x0);
  cfg.delays = DelayProfile::none(1);
  cfg.noise = NoiseModel::none(n);
  return cfg;
}

}  // namespace

TEST_CASE("noise-free scalar rollout follows the geometric closed form", "[sim]") {
  const DiscreteSystem sys = scalar(0.5, 1.0);
  const MatrixXd k = MatrixXd::Constant(1, 1, 0.2);
  const Trajectory tr = rollout(sys, k, quiet(1, 50, 1.0));
  REQUIRE(tr.steps() == 50);
  for (int t = 0; t <= 50; ++t) CHECK(tr.x[t](0) == Catch::Approx(std::pow(0.3, t)).epsilon(1e-12));
  // (1/T) sum 1.04 * 0.09^t
  const double want = 1.04 * (1 - std::pow(0.09, 50)) / (1 - 0.09) / 50;
  CHECK(lqr_cost(tr, CostWeights::identity(1, 1)) == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("divergent rollouts stop at the bound", "[sim]") {
  const DiscreteSystem sys = scalar(2.0, 1.0);
  const Trajectory tr = rollout(sys, MatrixXd::Zero(1, 1), quiet(1, 100, 1.0));
  CHECK(tr.diverged);
  CHECK(tr.diverged_at == 19);  // 2^20 is the first power above 1e6
  const ScenarioResult r = evaluate_scenario(sys, MatrixXd::Zero(1, 1), quiet(1, 100, 1.0),
                                             CostWeights::identity(1, 1), NoiseMoments::zero(1));
  CHECK(r.diverged);
}

TEST_CASE("single-pass evaluation agrees with stored-trajectory functionals", "[sim]") {
  const DiscreteSystem& sys = two_area();
  const CostWeights w = CostWeights::identity(16, 6);
  ScenarioTemplate tmpl;
  tmpl.horizon = 300;
  tmpl.impulse_scale = 0.1;
  tmpl.max_delay_s = 0.05;
  tmpl.loss = PacketLossModel{0.1, false};
  tmpl.noise = NoiseModel::diagonal(16, {1, 5, 9, 13}, 0.05);
  const NoiseMoments mom = compute_moments(tmpl.noise, w.q);
  const DareSolution lqr = solve_dare(sys.a, sys.b, w.q, w.r);
  const MatrixXd k = 0.5 * lqr.gain;
  for (int unit : {-1, 2}) {
    const ScenarioConfig cfg = make_scenario(tmpl, sys, 42, 3);
    Trajectory tr = rollout(sys, k, cfg);
    const ScenarioResult r = evaluate_scenario(sys, k, cfg, w, mom, unit);
    CHECK(r.objective == Catch::Approx(lqr_cost(tr, w)).epsilon(1e-12));
    CHECK(r.risk_sample == Catch::Approx(risk_sample(tr, sys, w.q, mom)).epsilon(1e-9));
    CHECK(r.msfd == Catch::Approx(msfd(tr, unit)).epsilon(1e-12));
    annotate_costs(tr, w);
    double sc = 0.0;
    for (double v : tr.state_cost) sc += v;
    CHECK(r.state_cost == Catch::Approx(sc / tr.steps()).epsilon(1e-12));
  }
}

TEST_CASE("frequency deviation converts rad/s to Hz", "[sim]") {
  Trajectory tr;
  VectorXd x = VectorXd::Zero(8);
  x(1) = 2 * std::numbers::pi;  // 1 Hz on unit 0
  x(5) = 0.0;
  tr.x = {x, x};
  tr.u = {VectorXd::Zero(1)};
  CHECK(msfd(tr, 0) == Catch::Approx(1.0));
  CHECK(msfd(tr, 1) == 0.0);
  CHECK(msfd(tr, -1) == Catch::Approx(0.5));
}

TEST_CASE("scenarios are reproducible and impulses bounded", "[sim]") {
  const DiscreteSystem& sys = two_area();
  ScenarioTemplate tmpl;
  tmpl.impulse_scale = 0.3;
  tmpl.max_delay_s = 0.1;
  const ScenarioConfig a = make_scenario(tmpl, sys, 7, 1);
  const ScenarioConfig b = make_scenario(tmpl, sys, 7, 1);
  const ScenarioConfig c = make_scenario(tmpl, sys, 7, 2);
  CHECK(a.x0 == b.x0);
  CHECK(a.delays.steps == b.delays.steps);
  CHECK(a.x0 != c.x0);
  const auto idx = default_impulse_indices(sys);
  CHECK(idx == std::vector<int>{1, 5, 9, 13});
  for (int i = 0; i < 16; ++i) {
    const bool speed = std::find(idx.begin(), idx.end(), i) != idx.end();
    if (speed) CHECK(std::abs(a.x0(i)) <= 0.3);
    else CHECK(a.x0(i) == 0.0);
  }
  CHECK(default_impulse_indices(DiscreteSystem::generic(MatrixXd::Identity(3, 3), MatrixXd::Ones(3, 1))).size() == 3);
}

TEST_CASE("empirical noise resamples the supplied columns", "[sim]") {
  MatrixXd draws(2, 3);
  draws << 1, 2, 3, -1, -2, -3;
  const NoiseModel model = NoiseModel::empirical(draws);
  NoiseSampler s(model, 5);
  VectorXd e;
  for (int i = 0; i < 20; ++i) {
    s.draw(e);
    CHECK(e(1) == -e(0));
    CHECK((e(0) == 1 || e(0) == 2 || e(0) == 3));
  }
  CHECK_THROWS(NoiseModel::gaussian(VectorXd::Zero(2), -MatrixXd::Identity(2, 2)).validate());
}

TEST_CASE("gaussian sampler reproduces its covariance", "[sim]") {
  Rng rng(3);
  const MatrixXd cov = random_spd(3, rng);
  const NoiseModel model = NoiseModel::gaussian(VectorXd::Zero(3), cov);
  NoiseSampler s(model, 1);
  MatrixXd acc = MatrixXd::Zero(3, 3);
  VectorXd e;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    s.draw(e);
    acc += e * e.transpose();
  }
  CHECK((acc / n - cov).cwiseAbs().maxCoeff() < 0.02 * cov.cwiseAbs().maxCoeff());
}

TEST_CASE("trajectory csv has a header and one row per step", "[sim]") {
  const DiscreteSystem sys = scalar(0.5, 1.0);
  Trajectory tr = rollout(sys, MatrixXd::Constant(1, 1, 0.1), quiet(1, 4, 1.0));
  annotate_costs(tr, CostWeights::identity(1, 1));
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const std::string s = os.str();
  CHECK(s.rfind("t,x0,u0,state_cost,input_cost\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 5);
}
