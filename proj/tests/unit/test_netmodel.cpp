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
#include "wadc/error.hpp"
#include "wadc/network_io.hpp"

using namespace wadc;
using namespace wadc::testing;

namespace {

VectorXd flatten(const AlgebraicOutputs& o) {
  VectorXd v(o.pe.size() + o.id.size() + o.pv.size() + o.qv.size());
  v << o.pe, o.id, o.pv, o.qv;
  return v;
}

// Perturbs coordinate j of (delta, E, theta, V).
OperatingPoint nudge(OperatingPoint op, int j, double h) {
  const int ng = static_cast<int>(op.e.size()), nv = static_cast<int>(op.v.size());
  if (j < ng) op.delta(j) += h;
  else if (j < 2 * ng) op.e(j - ng) += h;
  else if (j < 2 * ng + nv) op.theta(j - 2 * ng) += h;
  else op.v(j - 2 * ng - nv) += h;
  return op;
}

}  // namespace

TEST_CASE("power-flow jacobian agrees with central differences", "[netmodel]") {
  for (const char* name : {"two-area", "ring(3,2,7)", "ring(5,5,1)"}) {
    const BuiltinSystem bs = builtin_system(name);
    const ReducedNetwork red = reduce_network(bs.net);
    const MatrixXd jac = power_flow_jacobian(red, bs.op);
    const int n = static_cast<int>(jac.cols());
    REQUIRE(n == 2 * (bs.net.n_sg() + bs.net.n_vsc()));
    const double h = 1e-6;
    MatrixXd fd(n, n);
    for (int j = 0; j < n; ++j)
      fd.col(j) = (flatten(algebraic_outputs(red, nudge(bs.op, j, h))) -
                   flatten(algebraic_outputs(red, nudge(bs.op, j, -h)))) / (2 * h);
    INFO(name);
    CHECK((jac - fd).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("kron reduction preserves terminal behaviour", "[netmodel]") {
  const BuiltinSystem bs = builtin_system("two-area");
  const MatrixXcd y = augmented_admittance(bs.net);
  const std::vector<int> keep = retained_nodes(bs.net);
  const MatrixXcd yred = kron_reduce(y, keep);
  // Zero injection at eliminated nodes: solve for their voltages and compare currents.
  std::vector<int> elim;
  for (int i = 0; i < y.rows(); ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) elim.push_back(i);
  Rng rng(2);
  const MatrixXd re = random_matrix(static_cast<int>(keep.size()), 1, rng);
  const MatrixXd im = random_matrix(static_cast<int>(keep.size()), 1, rng);
  VectorXcd vr(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) vr(i) = {re(i, 0), im(i, 0)};
  MatrixXcd yee(elim.size(), elim.size()), yer(elim.size(), keep.size());
  for (std::size_t i = 0; i < elim.size(); ++i) {
    for (std::size_t k = 0; k < elim.size(); ++k) yee(i, k) = y(elim[i], elim[k]);
    for (std::size_t k = 0; k < keep.size(); ++k) yer(i, k) = y(elim[i], keep[k]);
  }
  const VectorXcd ve = yee.lu().solve(-yer * vr);
  VectorXcd full(y.rows());
  for (std::size_t i = 0; i < keep.size(); ++i) full(keep[i]) = vr(i);
  for (std::size_t i = 0; i < elim.size(); ++i) full(elim[i]) = ve(i);
  const VectorXcd current = y * full;
  VectorXcd ir(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) ir(i) = current(keep[i]);
  CHECK((ir - yred * vr).norm() < 1e-10 * ir.norm());
  for (std::size_t i = 0; i < elim.size(); ++i) CHECK(std::abs(current(elim[i])) < 1e-10);
}

TEST_CASE("singular eliminated block is reported", "[netmodel]") {
  BuiltinSystem bs = builtin_system("two-area");
  // An extra bus with no branches and no shunt cannot be eliminated.
  bs.net.buses.push_back(Bus{999, 1, 0.0, 0.0});
  CHECK_THROWS_AS(reduce_network(bs.net), NonReducibleNetwork);
}

TEST_CASE("built-in fixtures sit at an equilibrium", "[netmodel]") {
  for (const char* name : {"two-area", "ring(4,2,3)"}) {
    const BuiltinSystem bs = builtin_system(name);
    INFO(name);
    CHECK(operating_point_residual(bs.net, bs.op) < 1e-8);
  }
  CHECK_THROWS_AS(builtin_system("three-area"), ValidationError);
  CHECK_THROWS_AS(builtin_system("ring(1,0,0)"), ValidationError);
}

TEST_CASE("uniform angle shift is a null direction of the continuous model", "[netmodel]") {
  const BuiltinSystem bs = builtin_system("two-area");
  const LinearSystem lin = build_continuous(bs.net, bs.op);
  const int ng = lin.n_sg;
  VectorXd v = VectorXd::Zero(4 * ng);
  for (int i = 0; i < ng; ++i) v(4 * i) = 1.0;
  CHECK((lin.ac * v).cwiseAbs().maxCoeff() < 1e-9 * lin.ac.cwiseAbs().maxCoeff());
  CHECK(lin.bc.rows() == 4 * ng);
  CHECK(lin.bc.cols() == lin.n_sg + lin.n_vsc);
}

TEST_CASE("two-area discrete model dimensions and open-loop margin", "[netmodel]") {
  const DiscreteSystem& sys = two_area();
  CHECK(sys.state_dim() == 16);
  CHECK(sys.input_dim() == 6);
  CHECK(sys.n_blocks == 4);
  CHECK(sys.block_size == 4);
  CHECK(spectral_radius(sys.a) == Catch::Approx(1.0).margin(1e-9));
  CHECK(state_names(2).size() == 8);
  CHECK(input_names(2, 1).size() == 3);
}

TEST_CASE("network json round trip", "[netmodel]") {
  const BuiltinSystem bs = builtin_system("ring(3,1,4)");
  const nlohmann::json doc = network_to_json(bs.net, bs.op);
  const NetworkFile back = network_from_json(parse_json_text(doc.dump(), "mem"));
  CHECK(network_to_json(back.net, back.op) == doc);
  const DiscreteSystem a = discretize(build_continuous(bs.net, bs.op), 0.01);
  const DiscreteSystem b = discretize(build_continuous(back.net, back.op), 0.01);
  CHECK(a.a == b.a);
  CHECK(a.b == b.b);
}

TEST_CASE("malformed network input is rejected with a location", "[netmodel]") {
  try {
    parse_json_text("{\n  \"buses\": [1,\n", "net.json");
    FAIL("no exception");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("net.json:") == 0);
  }
  nlohmann::json doc = network_to_json(builtin_system("two-area").net, builtin_system("two-area").op);
  doc["generators"][0].erase("H");
  CHECK_THROWS_AS(network_from_json(doc), ValidationError);
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse("[[1,2],[3]]"), "M"), ValidationError);
}

TEST_CASE("settling restores equilibrium after an injection change", "[netmodel]") {
  BuiltinSystem bs = builtin_system("two-area");
  bs.net.vscs[0].p *= 1.05;
  CHECK(operating_point_residual(bs.net, bs.op) > 1e-6);
  const OperatingPoint op = settle_operating_point(bs.net, bs.op);
  CHECK(operating_point_residual(bs.net, op) < 1e-8);
}
