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

#include "support.hpp"
#include "wadc/comms.hpp"
#include "wadc/error.hpp"

using namespace wadc;
using namespace wadc::testing;

TEST_CASE("masks built from graphs are block constant", "[comms]") {
  const SparsityMask full = mask_from_graph(CommGraph::complete(4, 2));
  CHECK(full.count() == 6 * 16);
  CHECK(full.is_block_constant());
  const SparsityMask local = mask_from_graph(CommGraph::local_only(4, 2));
  CHECK(local.count() == 4 * 4);
  for (int l = 0; l < 6; ++l)
    for (int i = 0; i < 4; ++i) CHECK(local.block(l, i) == (l == i));
  const SparsityMask areas = mask_from_graph(CommGraph::from_areas(4, 2, {1, 1, 2, 2, 1, 2}, {}));
  CHECK(areas.block(4, 0));
  CHECK_FALSE(areas.block(4, 2));
  CHECK(areas.block(5, 3));
  const SparsityMask linked = mask_from_graph(CommGraph::from_areas(4, 2, {1, 1, 2, 2, 1, 2}, {{1, 2}}));
  CHECK(linked.count() == full.count());
  CHECK_THROWS_AS(SparsityMask(2, 7, 4), ValidationError);
}

TEST_CASE("projection zeroes exactly the masked-out entries", "[comms]") {
  Rng rng(1);
  const SparsityMask mask = mask_from_graph(CommGraph::local_only(3, 1));
  MatrixXd k = random_matrix(4, 12, rng);
  CHECK_FALSE(mask.admits(k));
  const MatrixXd before = k;
  mask.project(k);
  CHECK(mask.admits(k));
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 12; ++c) CHECK(k(r, c) == (mask(r, c) ? before(r, c) : 0.0));
  CHECK(mask.as_matrix().sum() == mask.count());
}

TEST_CASE("sampled delays are bounded and nested in the bound", "[comms]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DelayProfile d0 = sample_delays(0.0, 0.01, 4, seed);
    CHECK(d0.is_zero());
    DelayProfile prev = d0;
    for (double dmax : {0.02, 0.06, 0.10}) {
      const DelayProfile d = sample_delays(dmax, 0.01, 4, seed);
      for (int i = 0; i < 4; ++i) {
        CHECK(d.steps[i] >= 0);
        CHECK(d.steps[i] <= std::lround(dmax / 0.01));
        CHECK(d.steps[i] >= prev.steps[i]);
      }
      prev = d;
    }
  }
  const DelayProfile d = sample_delays(0.1, 0.01, 3, 9);
  for (int i = 0; i < 3; ++i) CHECK(d.lag(i, i) == 0);
  CHECK(d.lag(5, 1) == d.steps[1]);
}

TEST_CASE("state history returns lagged states and x0 before the start", "[comms]") {
  VectorXd x0 = VectorXd::Constant(2, -1.0);
  StateHistory h(x0, 3);
  CHECK(h.at_lag(2) == x0);
  for (int t = 1; t <= 6; ++t) {
    h.push(VectorXd::Constant(2, t));
    for (int lag = 0; lag <= 3; ++lag) {
      const double want = t - lag >= 1 ? t - lag : -1.0;
      CHECK(h.at_lag(lag)(0) == want);
    }
  }
}

// u_l(t) = -sum_i K_li x_i(max(t - lag(l, i), 0)), from the raw state sequence.
TEST_CASE("delayed feedback equals the lagged-state identity", "[comms]") {
  Rng rng(21);
  const int units = 3, bs = 2, ctrls = 4, horizon = 40;
  for (bool per_link : {false, true}) {
    const MatrixXd k = random_matrix(ctrls, units * bs, rng);
    const DelayProfile d = per_link ? sample_link_delays(0.07, 0.01, ctrls, units, 4)
                                    : sample_delays(0.07, 0.01, units, 4);
    std::vector<VectorXd> xs;
    for (int t = 0; t < horizon; ++t) xs.push_back(random_matrix(units * bs, 1, rng));
    FeedbackChannel ch(k, units, bs, d, PacketLossModel{}, 0, xs[0]);
    VectorXd u;
    for (int t = 0; t < horizon; ++t) {
      ch.control(xs[t], u);
      for (int l = 0; l < ctrls; ++l) {
        double want = 0.0;
        for (int i = 0; i < units; ++i) {
          const int lag = l == i ? 0 : (per_link ? d.per_link[l][i] : d.steps[i]);
          const VectorXd& xv = xs[std::max(t - lag, 0)];
          want -= k.row(l).segment(i * bs, bs).dot(xv.segment(i * bs, bs));
        }
        CHECK(u(l) == Catch::Approx(want).margin(1e-12));
      }
    }
  }
}

TEST_CASE("undelayed lossless channel reproduces dense feedback bit for bit", "[comms]") {
  Rng rng(2);
  const MatrixXd k = random_matrix(6, 16, rng);
  const VectorXd x0 = random_matrix(16, 1, rng);
  FeedbackChannel ch(k, 4, 4, DelayProfile::none(4), PacketLossModel{}, 0, x0);
  VectorXd u, ud;
  for (int t = 0; t < 5; ++t) {
    const VectorXd x = t == 0 ? x0 : VectorXd(random_matrix(16, 1, rng));
    ch.control(x, u);
    dense_feedback(k, 4, 4, x, ud);
    CHECK(u == ud);
    CHECK((ud + k * x).norm() < 1e-12);
  }
}

TEST_CASE("packet loss holds the last delivered value", "[comms]") {
  std::vector<VectorXd> stream;
  for (int t = 0; t < 200; ++t) stream.push_back(VectorXd::Constant(1, t + 1.0));
  const auto none = apply_loss(PacketLossModel{0.0, false}, stream, 3);
  for (int t = 0; t < 200; ++t) CHECK(none[t](0) == t + 1.0);
  const auto all = apply_loss(PacketLossModel{1.0, false}, stream, 3);
  CHECK(all.front() == stream.front());
  for (const auto& v : all) CHECK(v(0) == 1.0);  // held initial value

  const auto lo = apply_loss(PacketLossModel{0.2, false}, stream, 3);
  const auto hi = apply_loss(PacketLossModel{0.5, false}, stream, 3);
  int fresh_lo = 0, fresh_hi = 0;
  for (int t = 1; t < 200; ++t) {
    const bool f_lo = lo[t](0) == t + 1.0, f_hi = hi[t](0) == t + 1.0;
    fresh_lo += f_lo;
    fresh_hi += f_hi;
    if (f_hi) CHECK(f_lo);  // losses are nested in p
    CHECK(lo[t](0) <= t + 1.0);
    CHECK(lo[t](0) >= lo[t - 1](0));
  }
  CHECK(fresh_lo > fresh_hi);
  CHECK_THROWS_AS(PacketLossModel({1.5, false}).validate(), ValidationError);
}

TEST_CASE("lossy channel with p = 1 keeps the initial control", "[comms]") {
  Rng rng(4);
  const MatrixXd k = random_matrix(2, 4, rng);
  const VectorXd x0 = random_matrix(4, 1, rng);
  FeedbackChannel ch(k, 2, 2, DelayProfile::none(2), PacketLossModel{1.0, true}, 8, x0);
  VectorXd u;
  for (int t = 0; t < 10; ++t) {
    ch.control(random_matrix(4, 1, rng), u);
    // co-located blocks stay lost too: every block is held at K x0
    CHECK((u + k * x0).norm() < 1e-12);
  }
}
