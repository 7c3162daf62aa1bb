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

#include <unsupported/Eigen/KroneckerProduct>

#include "support.hpp"
#include "wadc/error.hpp"
#include "wadc/linalg.hpp"

using namespace wadc;
using namespace wadc::testing;

TEST_CASE("lyapunov solution matches the vectorized linear system", "[linalg]") {
  Rng rng(11);
  for (int n : {1, 3, 7, 12}) {
    const MatrixXd a = random_stable(n, rng, 0.93);
    const MatrixXd w = random_spd(n, rng);
    const MatrixXd x = solve_discrete_lyapunov(a, w);
    // (I - A (x) A) vec X = vec W
    const MatrixXd big = MatrixXd::Identity(n * n, n * n) - Eigen::kroneckerProduct(a, a).eval();
    const VectorXd vw = Eigen::Map<const VectorXd>(w.data(), n * n);
    const VectorXd vx = big.fullPivLu().solve(vw);
    const MatrixXd oracle = Eigen::Map<const MatrixXd>(vx.data(), n, n);
    CHECK((x - oracle).norm() <= 1e-10 * oracle.norm());
    CHECK(lyapunov_residual(a, x, w) < 1e-10);
    CHECK(is_symmetric(x, 0.0));
    CHECK(is_psd(x));
  }
}

TEST_CASE("lyapunov residual stays small near the stability boundary", "[linalg]") {
  Rng rng(5);
  const MatrixXd a = random_stable(10, rng, 0.999);
  const MatrixXd w = random_spd(10, rng);
  const MatrixXd x = solve_discrete_lyapunov(a, w);
  CHECK(lyapunov_residual(a, x, w) < 1e-10);
  CHECK((x - lyapunov_series(a, w)).norm() <= 1e-7 * x.norm());
}

TEST_CASE("dare gain equals the converged riccati recursion", "[linalg]") {
  Rng rng(3);
  const int n = 5, m = 2;
  const MatrixXd a = random_matrix(n, n, rng) * 0.6;
  const MatrixXd b = random_matrix(n, m, rng);
  const MatrixXd q = random_spd(n, rng);
  const MatrixXd r = random_spd(m, rng);
  const DareSolution sol = solve_dare(a, b, q, r);

  MatrixXd p = q;
  for (int i = 0; i < 20000; ++i) {
    const MatrixXd k = (r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    const MatrixXd next = q + a.transpose() * p * (a - b * k);
    const double d = (next - p).norm();
    p = 0.5 * (next + next.transpose());
    if (d < 1e-14 * p.norm()) break;
  }
  const MatrixXd k_oracle = (r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
  CHECK((sol.x - p).norm() <= 1e-9 * p.norm());
  CHECK((sol.gain - k_oracle).norm() <= 1e-9 * k_oracle.norm());
  CHECK(spectral_radius(a - b * sol.gain) < 1.0);
}

TEST_CASE("dare stabilizes an unstable plant", "[linalg]") {
  MatrixXd a(2, 2), b(2, 1);
  a << 1.1, 0.3, 0.0, 1.02;
  b << 0.0, 1.0;
  const DareSolution sol = solve_dare(a, b, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1));
  CHECK(spectral_radius(a - b * sol.gain) < 1.0);
}

TEST_CASE("zero-order hold matches the truncated power series", "[linalg]") {
  Rng rng(8);
  const int n = 6, m = 3;
  const MatrixXd ac = random_matrix(n, n, rng);
  const MatrixXd bc = random_matrix(n, m, rng);
  const double dt = 0.05;
  const auto [ad, bd] = zero_order_hold(ac, bc, dt);
  MatrixXd ad_s = MatrixXd::Identity(n, n), term = MatrixXd::Identity(n, n);
  MatrixXd bd_s = MatrixXd::Identity(n, n) * dt, bterm = MatrixXd::Identity(n, n) * dt;
  for (int k = 1; k < 40; ++k) {
    term = term * ac * (dt / k);
    ad_s += term;
    bterm = bterm * ac * (dt / (k + 1));
    bd_s += bterm;
  }
  bd_s = bd_s * bc;
  CHECK((ad - ad_s).norm() < 1e-13);
  CHECK((bd - bd_s).norm() < 1e-13);
}

TEST_CASE("spectral radius of a rotation-scaling matrix", "[linalg]") {
  MatrixXd a(2, 2);
  a << 0.6, -0.8, 0.8, 0.6;
  CHECK(spectral_radius(a) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(spectral_radius(0.5 * a) == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("definiteness predicates", "[linalg]") {
  MatrixXd m(2, 2);
  m << 1, 0, 0, 0;
  CHECK(is_psd(m));
  CHECK_FALSE(is_pd(m));
  m(1, 1) = -1e-3;
  CHECK_FALSE(is_psd(m));
  m << 1, 0.5, 0.4, 1;
  CHECK_FALSE(is_symmetric(m));
}

TEST_CASE("compensated sum recovers cancelled low-order terms", "[linalg]") {
  CompensatedSum s;
  for (double v : {1.0, 1e100, 1.0, -1e100}) s.add(v);
  CHECK(s.value() == 2.0);
  const std::vector<double> v{0.1, 0.2, 0.3};
  CHECK(compensated_mean(v) == Catch::Approx(0.2).epsilon(1e-15));
}
