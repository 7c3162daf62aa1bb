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

#include "support.hpp"
#include "wadc/risklqr.hpp"

using namespace wadc;
using namespace wadc::testing;

namespace {

struct Fixture {
  DiscreteSystem sys;
  MatrixXd k;
  CostWeights w;
  NoiseMoments mom;
};

Fixture random_fixture(std::uint64_t seed, int n, int m, bool with_mean) {
  Rng rng(seed);
  Fixture f;
  const MatrixXd b = random_matrix(n, m, rng);
  const MatrixXd k = random_matrix(m, n, rng, 0.1);
  const MatrixXd ak = random_stable(n, rng, 0.9);
  f.sys = DiscreteSystem::generic(ak + b * k, b);
  f.k = k;
  f.w = CostWeights(random_spd(n, rng), random_spd(m, rng));
  f.mom = compute_moments(NoiseModel::gaussian(with_mean ? VectorXd(random_matrix(n, 1, rng, 0.1)) : VectorXd::Zero(n),
                                               random_spd(n, rng, 0.05) * 0.1),
                          f.w.q);
  if (with_mean) f.mom.m3 = random_matrix(n, 1, rng, 0.01);
  return f;
}

}  // namespace

TEST_CASE("analytic R0 and Rc match the series oracle", "[risklqr]") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Fixture f = random_fixture(seed, 5, 2, seed % 2 == 0);
    const MatrixXd ak = f.sys.a - f.sys.b * f.k;
    const MatrixXd sigma = lyapunov_series(ak, f.mom.w);
    const VectorXd xbar = (MatrixXd::Identity(5, 5) - ak).inverse() * f.mom.mean;
    const MatrixXd second = sigma + xbar * xbar.transpose();
    const MatrixXd& q = f.w.q;
    const double r0 = ((q + f.k.transpose() * f.w.r * f.k) * second).trace();
    const double rc = 4 * (q * f.mom.w * q * second).trace() + 4 * xbar.dot(q * f.mom.m3);
    CHECK(eval_R0_analytic(f.sys, f.k, f.mom, f.w) == Catch::Approx(r0).epsilon(1e-10));
    CHECK(eval_Rc_analytic(f.sys, f.k, f.mom, q) == Catch::Approx(rc).epsilon(1e-10));
    const SteadyState ss = steady_state(f.sys, f.k, f.mom);
    CHECK(ss.stable);
    CHECK(ss.residual < 1e-10);
  }
}

TEST_CASE("unstable gains evaluate to infinity", "[risklqr]") {
  const Fixture f = random_fixture(9, 3, 1, false);
  const MatrixXd bad = f.k + MatrixXd::Constant(1, 3, 50.0);
  REQUIRE(spectral_radius(f.sys.a - f.sys.b * bad) >= 1.0);
  CHECK(std::isinf(eval_R0_analytic(f.sys, bad, f.mom, f.w)));
  CHECK(std::isinf(eval_Rc_analytic(f.sys, bad, f.mom, f.w.q)));
  AnalyticEvaluator ev(f.sys, f.w, f.mom);
  CHECK(eval_phi(ev, bad, RiskConfig{}, 0) == kDivergencePenalty);
}

TEST_CASE("lagrangian is affine in the multiplier", "[risklqr]") {
  const Fixture f = random_fixture(3, 6, 2, true);
  const double cbar = 0.3;
  const double r0 = eval_R0_analytic(f.sys, f.k, f.mom, f.w);
  const double rc = eval_Rc_analytic(f.sys, f.k, f.mom, f.w.q);
  for (double lam : {0.0, 0.5, 3.0, 100.0}) {
    const double l = eval_lagrangian(f.sys, f.k, lam, f.mom, f.w, cbar);
    const double direct = r0 + lam * (rc - cbar);
    CHECK(std::abs(l - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
  }
  const double l0 = eval_lagrangian(f.sys, f.k, 0.0, f.mom, f.w, cbar);
  const double l1 = eval_lagrangian(f.sys, f.k, 10.0, f.mom, f.w, cbar);
  const double lm = eval_lagrangian(f.sys, f.k, 4.0, f.mom, f.w, cbar);
  CHECK(std::abs(lm - (0.6 * l0 + 0.4 * l1)) <= 1e-10 * std::abs(l1));
}

TEST_CASE("max oracle picks the hinge maximizer", "[risklqr]") {
  const OracleResult inside = max_oracle(CostEstimate{2.0, 0.4, true}, 0.5, 100.0);
  CHECK(inside.lambda == 0.0);
  CHECK(inside.phi == 2.0);
  const OracleResult tie = max_oracle(CostEstimate{2.0, 0.5, true}, 0.5, 100.0);
  CHECK(tie.lambda == 0.0);
  const OracleResult outside = max_oracle(CostEstimate{2.0, 0.7, true}, 0.5, 100.0);
  CHECK(outside.lambda == 100.0);
  CHECK(outside.phi == Catch::Approx(22.0));
  const OracleResult neutral = max_oracle(CostEstimate{2.0, 0.7, true}, 0.5, 0.0);
  CHECK(neutral.phi == 2.0);
  const OracleResult unstable = max_oracle(CostEstimate{1.0, 1.0, false}, 0.5, 100.0);
  CHECK_FALSE(unstable.stable);
  CHECK(unstable.phi == kDivergencePenalty);
}

TEST_CASE("gaussian closed-form moments agree with sampling", "[risklqr]") {
  Rng rng(17);
  const int n = 3;
  const MatrixXd w = random_spd(n, rng);
  const MatrixXd q = random_spd(n, rng);
  const NoiseModel model = NoiseModel::gaussian(VectorXd::Zero(n), w);
  const NoiseMoments cf = compute_moments(model, q);
  CHECK(cf.m4 == Catch::Approx(2 * (w * q * w * q).trace()).epsilon(1e-12));
  CHECK(cf.m3.isZero(0.0));
  CHECK(cf.c_bar(0.5, q) == Catch::Approx(0.5 - cf.m4 + 4 * (w * q * w * q).trace()).epsilon(1e-12));
  const NoiseMoments mc = sample_gaussian_moments(model, q, 200000, 4);
  CHECK(std::abs(mc.m4 - cf.m4) < 4 * mc.m4_stderr);
  CHECK(mc.m3.cwiseAbs().maxCoeff() < 4.5 * mc.m3_stderr);
}

TEST_CASE("sample moments of a skewed two-point law", "[risklqr]") {
  // values 0, 0, 3 -> mean 1, deviations -1, -1, 2
  MatrixXd s(1, 3);
  s << 0, 0, 3;
  const NoiseMoments m = moments_from_samples(s, MatrixXd::Identity(1, 1));
  CHECK(m.mean(0) == Catch::Approx(1.0));
  CHECK(m.w(0, 0) == Catch::Approx(2.0));
  CHECK(m.m3(0) == Catch::Approx((-1.0 - 1.0 + 8.0) / 3));
  // (e^2 - 2)^2 over {1, 1, 4}: (1 + 1 + 4) / 3
  CHECK(m.m4 == Catch::Approx(2.0));
  CHECK(m.samples == 3);
}

TEST_CASE("monte carlo evaluator is identical serial and parallel", "[risklqr]") {
  const DiscreteSystem& sys = two_area();
  const CostWeights w = CostWeights::identity(16, 6);
  ScenarioTemplate tmpl;
  tmpl.horizon = 200;
  tmpl.impulse_scale = 0.1;
  tmpl.max_delay_s = 0.06;
  tmpl.noise = NoiseModel::diagonal(16, {1, 5, 9, 13}, 0.05);
  const NoiseMoments mom = compute_moments(tmpl.noise, w.q);
  const MatrixXd k = 0.25 * solve_dare(sys.a, sys.b, w.q, w.r).gain;
  const MonteCarloEvaluator serial(sys, w, mom, tmpl, 8, Parallelism::Serial);
  const MonteCarloEvaluator par(sys, w, mom, tmpl, 8, Parallelism::OpenMP);
  const CostEstimate a = serial.evaluate(k, 99), b = par.evaluate(k, 99);
  CHECK(a.r0 == b.r0);
  CHECK(a.rc == b.rc);
  CHECK(a.stable);
  const CostEstimate c = serial.evaluate(k, 100);
  CHECK(c.r0 != a.r0);
}

TEST_CASE("moments json round trip", "[risklqr]") {
  const Fixture f = random_fixture(5, 4, 1, true);
  const nlohmann::json j = moments_to_json(f.mom, 0.5, f.w.q, "nominal");
  const NoiseMoments back = moments_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.mean == f.mom.mean);
  CHECK(back.w == f.mom.w);
  CHECK(back.m3 == f.mom.m3);
  CHECK(back.m4 == f.mom.m4);
  CHECK(j.at("c_bar").get<double>() == Catch::Approx(f.mom.c_bar(0.5, f.w.q)));
  CHECK_THROWS(moments_from_json(nlohmann::json::parse("{\"mean\": [1]}")));
}

TEST_CASE("effective moments reduce to the nominal ones without delay", "[risklqr]") {
  const DiscreteSystem& sys = two_area();
  const CostWeights w = CostWeights::identity(16, 6);
  ScenarioTemplate tmpl;
  tmpl.horizon = 2000;
  tmpl.noise = NoiseModel::diagonal(16, {1, 5, 9, 13}, 0.1);
  const MatrixXd k = 0.25 * solve_dare(sys.a, sys.b, w.q, w.r).gain;
  const NoiseMoments eff = estimate_effective_moments(sys, k, tmpl, w.q, 10, 1);
  const NoiseMoments nom = compute_moments(tmpl.noise, w.q);
  CHECK((eff.w - nom.w).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(std::abs(eff.m4 - nom.m4) < 5 * eff.m4_stderr + 1e-12);
  tmpl.max_delay_s = 0.1;
  const NoiseMoments delayed = estimate_effective_moments(sys, k, tmpl, w.q, 10, 1);
  CHECK(delayed.w.trace() > eff.w.trace());
}

TEST_CASE("risk configuration validation", "[risklqr]") {
  CHECK_THROWS((RiskConfig{0.0, 1.0}.validate()));
  CHECK_THROWS((RiskConfig{0.5, -1.0}.validate()));
  CHECK_NOTHROW((RiskConfig{0.5, 0.0}.validate()));
}
