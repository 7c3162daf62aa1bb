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

#include <string>
#include <string_view>
#include <vector>

#include "wadc/linalg.hpp"

namespace wadc {

/// Fourth-order synchronous generator data, per unit on the system base.
///
/// `inertia` multiplies the speed deviation in rad/s directly, so the swing
/// row reads  d(omega)/dt = (Pm - Pe - D omega) / (2 H).
struct SgParams {
  double inertia = 0.0;        // H
  double damping = 0.0;        // D
  double xd = 0.0;             // d-axis synchronous reactance
  double xd_prime = 0.0;       // d-axis transient reactance
  double td0_prime = 0.0;      // open-circuit transient time constant (s)
  double ta = 0.0;             // regulator time constant (s)
  double ka = 0.0;             // regulator gain
  double pm = 0.0;             // mechanical power
  double vref = 0.0;           // voltage set-point

  void validate() const;
};

struct Bus {
  int id = 0;
  int area = 0;
  double g_shunt = 0.0;
  double b_shunt = 0.0;
};

struct Branch {
  int from = 0;  // bus ids
  int to = 0;
  double g = 0.0;  // series admittance g + jb
  double b = 0.0;
};

struct Generator {
  int bus = 0;
  SgParams params;
};

struct Vsc {
  int bus = 0;
  double p = 0.0;  // steady-state active injection
  double q = 0.0;  // steady-state reactive injection
};

/// Internal voltages/angles of the generators and terminal voltages/angles
/// of the converters.
struct OperatingPoint {
  VectorXd e;      // per SG
  VectorXd delta;  // per SG (rad)
  VectorXd v;      // per VSC
  VectorXd theta;  // per VSC (rad)

  void validate(int n_sg, int n_vsc) const;
};

struct NetworkDescription {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Vsc> vscs;

  int n_sg() const { return static_cast<int>(generators.size()); }
  int n_vsc() const { return static_cast<int>(vscs.size()); }
  int bus_index(int id) const;  // throws ValidationError for unknown ids
  void validate() const;
};

/// Admittance over the retained nodes: SG internal nodes first (SG order),
/// then VSC terminal buses (VSC order).
struct ReducedNetwork {
  MatrixXcd y;
  int n_sg = 0;
  int n_vsc = 0;
};

/// Full nodal admittance: network buses first, then one internal node per
/// generator tied to its terminal bus through j*xd'.
MatrixXcd augmented_admittance(const NetworkDescription& net);

/// Node indices (into the augmented admittance) kept by the reduction.
std::vector<int> retained_nodes(const NetworkDescription& net);

/// Schur complement of `y` onto `retained` (in the given order).
MatrixXcd kron_reduce(const MatrixXcd& y, const std::vector<int>& retained);

ReducedNetwork reduce_network(const NetworkDescription& net);

struct AlgebraicOutputs {
  VectorXd pe, qe, id;  // per SG
  VectorXd pv, qv;      // per VSC
};

AlgebraicOutputs algebraic_outputs(const ReducedNetwork& red, const OperatingPoint& op);

/// d(Pe, Id, Pv, Qv) / d(delta, E, theta, V); square of size 2*(Ng+Nv).
MatrixXd power_flow_jacobian(const ReducedNetwork& red, const OperatingPoint& op);

/// Linear maps from (delta, E, Pv, Qv) deviations to Pe and Id deviations,
/// with the converter voltages solved out of the linearized power flow.
struct AlgebraicElimination {
  MatrixXd ap1, ap2, ap3, ap4;
  MatrixXd ai1, ai2, ai3, ai4;
};

AlgebraicElimination eliminate_algebraic(const MatrixXd& jacobian, int n_sg, int n_vsc);

/// Continuous model. States: [delta, omega, E, Efd] per SG in SG order.
/// Inputs: all voltage set-point adjustments, then all converter active
/// power adjustments. Converter reactive power adjustments are held at zero.
struct LinearSystem {
  MatrixXd ac;
  MatrixXd bc;
  int n_sg = 0;
  int n_vsc = 0;
};

/// Discrete model x+ = A x + B u. `block_size` states belong to each of the
/// `n_blocks` measured units (4 per SG for power systems); controllers with
/// index < n_blocks are co-located with the unit of the same index.
struct DiscreteSystem {
  MatrixXd a;
  MatrixXd b;
  double dt = 0.0;
  int n_blocks = 1;
  int block_size = 1;

  int state_dim() const { return static_cast<int>(a.rows()); }
  int input_dim() const { return static_cast<int>(b.cols()); }
  void validate() const;

  /// Wraps an arbitrary (A, B) pair as a single measured unit.
  static DiscreteSystem generic(MatrixXd a, MatrixXd b, double dt = 1.0);
};

LinearSystem build_continuous(const NetworkDescription& net, const OperatingPoint& op);

DiscreteSystem discretize(const LinearSystem& sys, double dt);

/// Largest violation of the steady-state equations at `op`: generator and
/// converter power balance and the exciter/flux equilibrium implied by
/// Vbar. Zero for a consistent fixture.
double operating_point_residual(const NetworkDescription& net, const OperatingPoint& op);

/// Re-solves the reduced network for generator angles (SG 0 is the angle
/// reference and absorbs the power imbalance) and converter voltages with
/// internal voltages held fixed, then updates SG 0's Pm and every Vbar so
/// the result is an equilibrium. Throws DegenerateOperatingPoint when
/// Newton's method fails.
OperatingPoint settle_operating_point(NetworkDescription& net, const OperatingPoint& guess);

struct BuiltinSystem {
  std::string name;
  NetworkDescription net;
  OperatingPoint op;
};

/// "two-area" or "ring(Ng,Nv,seed)".
BuiltinSystem builtin_system(std::string_view name);

std::vector<std::string> state_names(int n_sg);
std::vector<std::string> input_names(int n_sg, int n_vsc);

}  // namespace wadc
