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

#include "wadc/netmodel.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include "wadc/error.hpp"

namespace wadc {

using cd = std::complex<double>;

void SgParams::validate() const {
  if (!(inertia > 0.0)) throw ValidationError("generator: H must be positive");
  if (!(td0_prime > 0.0)) throw ValidationError("generator: Tdp must be positive");
  if (!(ta > 0.0)) throw ValidationError("generator: Ta must be positive");
  if (!(xd_prime > 0.0) || !(xd >= xd_prime))
    throw ValidationError("generator: require xd >= xdp > 0");
}

void OperatingPoint::validate(int n_sg, int n_vsc) const {
  if (e.size() != n_sg || delta.size() != n_sg || v.size() != n_vsc || theta.size() != n_vsc)
    throw ValidationError("operating point: dimensions do not match the network");
  if ((e.array() <= 0.0).any() || (v.array() <= 0.0).any())
    throw ValidationError("operating point: voltage magnitudes must be positive");
}

int NetworkDescription::bus_index(int id) const {
  for (std::size_t k = 0; k < buses.size(); ++k)
    if (buses[k].id == id) return static_cast<int>(k);
  throw ValidationError(fmt::format("unknown bus id {}", id));
}

void NetworkDescription::validate() const {
  std::set<int> ids;
  for (const auto& bus : buses)
    if (!ids.insert(bus.id).second)
      throw ValidationError(fmt::format("duplicate bus id {}", bus.id));
  for (const auto& br : branches) {
    bus_index(br.from);
    bus_index(br.to);
    if (br.from == br.to) throw ValidationError(fmt::format("branch {}-{} is a self loop", br.from, br.to));
  }
  for (const auto& g : generators) {
    bus_index(g.bus);
    g.params.validate();
  }
  std::set<int> vsc_buses;
  for (const auto& c : vscs) {
    bus_index(c.bus);
    if (!vsc_buses.insert(c.bus).second)
      throw ValidationError(fmt::format("two converters on bus {}", c.bus));
  }
  if (generators.empty() && vscs.empty())
    throw ValidationError("network has no generators or converters to retain");
}

MatrixXcd augmented_admittance(const NetworkDescription& net) {
  const int nb = static_cast<int>(net.buses.size());
  const int n = nb + net.n_sg();
  MatrixXcd y = MatrixXcd::Zero(n, n);
  auto stamp = [&y](int i, int k, cd adm) {
    y(i, i) += adm;
    y(k, k) += adm;
    y(i, k) -= adm;
    y(k, i) -= adm;
  };
  for (const auto& br : net.branches)
    stamp(net.bus_index(br.from), net.bus_index(br.to), cd(br.g, br.b));
  for (int k = 0; k < nb; ++k) y(k, k) += cd(net.buses[k].g_shunt, net.buses[k].b_shunt);
  for (int i = 0; i < net.n_sg(); ++i) {
    const double xdp = net.generators[i].params.xd_prime;
    stamp(nb + i, net.bus_index(net.generators[i].bus), cd(0.0, -1.0 / xdp));
  }
  return y;
}

std::vector<int> retained_nodes(const NetworkDescription& net) {
  const int nb = static_cast<int>(net.buses.size());
  std::vector<int> keep;
  for (int i = 0; i < net.n_sg(); ++i) keep.push_back(nb + i);
  for (const auto& c : net.vscs) keep.push_back(net.bus_index(c.bus));
  return keep;
}

MatrixXcd kron_reduce(const MatrixXcd& y, const std::vector<int>& retained) {
  const int n = static_cast<int>(y.rows());
  if (retained.empty()) throw ValidationError("kron reduction: retained set is empty");
  std::vector<char> keep(n, 0);
  for (int r : retained) {
    if (r < 0 || r >= n) throw ValidationError("kron reduction: retained node out of range");
    if (keep[r]) throw ValidationError("kron reduction: retained node listed twice");
    keep[r] = 1;
  }
  std::vector<int> elim;
  for (int k = 0; k < n; ++k)
    if (!keep[k]) elim.push_back(k);

  const int nr = static_cast<int>(retained.size());
  const int ne = static_cast<int>(elim.size());
  MatrixXcd yrr(nr, nr), yre(nr, ne), yer(ne, nr), yee(ne, ne);
  for (int i = 0; i < nr; ++i) {
    for (int k = 0; k < nr; ++k) yrr(i, k) = y(retained[i], retained[k]);
    for (int k = 0; k < ne; ++k) yre(i, k) = y(retained[i], elim[k]);
  }
  for (int i = 0; i < ne; ++i) {
    for (int k = 0; k < nr; ++k) yer(i, k) = y(elim[i], retained[k]);
    for (int k = 0; k < ne; ++k) yee(i, k) = y(elim[i], elim[k]);
  }
  if (ne == 0) return yrr;

  Eigen::FullPivLU<MatrixXcd> lu(yee);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    const MatrixXcd ker = lu.kernel();
    std::vector<int> offending;
    for (int i = 0; i < ne; ++i)
      if (ker.row(i).cwiseAbs().maxCoeff() > 1e-9) offending.push_back(elim[i]);
    throw NonReducibleNetwork(fmt::format(
        "non-reducible network: eliminated nodes {{{}}} form a singular block",
        fmt::join(offending, ", ")));
  }
  return yrr - yre * lu.solve(yer);
}

ReducedNetwork reduce_network(const NetworkDescription& net) {
  net.validate();
  return {kron_reduce(augmented_admittance(net), retained_nodes(net)), net.n_sg(), net.n_vsc()};
}

namespace {

struct NodeState {
  VectorXd mag;
  VectorXd ang;
};

NodeState stack(const OperatingPoint& op) {
  NodeState s;
  s.mag.resize(op.e.size() + op.v.size());
  s.ang.resize(s.mag.size());
  s.mag << op.e, op.v;
  s.ang << op.delta, op.theta;
  return s;
}

// Nodal injections P_k, Q_k over the reduced admittance.
void injections(const MatrixXcd& y, const NodeState& s, VectorXd& p, VectorXd& q) {
  const Eigen::Index n = s.mag.size();
  p = VectorXd::Zero(n);
  q = VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index m = 0; m < n; ++m) {
      const double g = y(k, m).real();
      const double b = y(k, m).imag();
      const double d = s.ang(k) - s.ang(m);
      const double vv = s.mag(k) * s.mag(m);
      p(k) += vv * (g * std::cos(d) + b * std::sin(d));
      q(k) += vv * (g * std::sin(d) - b * std::cos(d));
    }
  }
}

}  // namespace

AlgebraicOutputs algebraic_outputs(const ReducedNetwork& red, const OperatingPoint& op) {
  op.validate(red.n_sg, red.n_vsc);
  VectorXd p, q;
  injections(red.y, stack(op), p, q);
  AlgebraicOutputs out;
  out.pe = p.head(red.n_sg);
  out.qe = q.head(red.n_sg);
  out.id = out.qe.cwiseQuotient(op.e);
  out.pv = p.tail(red.n_vsc);
  out.qv = q.tail(red.n_vsc);
  return out;
}

MatrixXd power_flow_jacobian(const ReducedNetwork& red, const OperatingPoint& op) {
  op.validate(red.n_sg, red.n_vsc);
  const NodeState s = stack(op);
  const int ng = red.n_sg;
  const int nv = red.n_vsc;
  const int n = ng + nv;
  VectorXd p, q;
  injections(red.y, s, p, q);

  // Partials of nodal P and Q with respect to node angles and magnitudes.
  MatrixXd dp_da = MatrixXd::Zero(n, n), dp_dv = MatrixXd::Zero(n, n);
  MatrixXd dq_da = MatrixXd::Zero(n, n), dq_dv = MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int m = 0; m < n; ++m) {
      const double g = red.y(k, m).real();
      const double b = red.y(k, m).imag();
      const double d = s.ang(k) - s.ang(m);
      const double c = std::cos(d), sn = std::sin(d);
      if (m == k) {
        dp_dv(k, k) += 2.0 * s.mag(k) * g;
        dq_dv(k, k) -= 2.0 * s.mag(k) * b;
        continue;
      }
      const double vv = s.mag(k) * s.mag(m);
      dp_da(k, m) = vv * (g * sn - b * c);
      dp_da(k, k) -= dp_da(k, m);
      dq_da(k, m) = -vv * (g * c + b * sn);
      dq_da(k, k) -= dq_da(k, m);
      dp_dv(k, m) = s.mag(k) * (g * c + b * sn);
      dp_dv(k, k) += s.mag(m) * (g * c + b * sn);
      dq_dv(k, m) = s.mag(k) * (g * sn - b * c);
      dq_dv(k, k) += s.mag(m) * (g * sn - b * c);
    }
  }

  // Column order (delta, E, theta, V) = (ang[:ng], mag[:ng], ang[ng:], mag[ng:]).
  auto col_of = [ng, nv](int block, int j) {
    switch (block) {
      case 0: return j;                // delta
      case 1: return ng + j;           // E
      case 2: return 2 * ng + j;       // theta
      default: return 2 * ng + nv + j; // V
    }
  };
  MatrixXd jac = MatrixXd::Zero(2 * n, 2 * n);
  for (int node = 0; node < n; ++node) {
    const bool is_sg = node < ng;
    const int local = is_sg ? node : node - ng;
    const int ang_col = is_sg ? col_of(0, local) : col_of(2, local);
    const int mag_col = is_sg ? col_of(1, local) : col_of(3, local);
    for (int row = 0; row < n; ++row) {
      if (row < ng) {
        // Pe and Id = Qe / E
        const double e = s.mag(row);
        jac(row, ang_col) = dp_da(row, node);
        jac(row, mag_col) = dp_dv(row, node);
        jac(ng + row, ang_col) = dq_da(row, node) / e;
        jac(ng + row, mag_col) = dq_dv(row, node) / e;
        if (node == row) jac(ng + row, mag_col) -= q(row) / (e * e);
      } else {
        const int j = row - ng;
        jac(2 * ng + j, ang_col) = dp_da(row, node);
        jac(2 * ng + j, mag_col) = dp_dv(row, node);
        jac(2 * ng + nv + j, ang_col) = dq_da(row, node);
        jac(2 * ng + nv + j, mag_col) = dq_dv(row, node);
      }
    }
  }
  return jac;
}

AlgebraicElimination eliminate_algebraic(const MatrixXd& jacobian, int n_sg, int n_vsc) {
  const int ns = 2 * n_sg;
  const int na = 2 * n_vsc;
  if (jacobian.rows() != ns + na || jacobian.cols() != ns + na)
    throw ValidationError("eliminate_algebraic: jacobian has the wrong shape");
  const MatrixXd jys = jacobian.topLeftCorner(ns, ns);
  const MatrixXd jya = jacobian.topRightCorner(ns, na);
  const MatrixXd jzs = jacobian.bottomLeftCorner(na, ns);
  const MatrixXd jza = jacobian.bottomRightCorner(na, na);

  MatrixXd state_map = jys;            // d(Pe,Id)/d(delta,E) with (theta,V) solved out
  MatrixXd inj_map = MatrixXd(ns, na); // d(Pe,Id)/d(Pv,Qv)
  if (na > 0) {
    Eigen::FullPivLU<MatrixXd> lu(jza);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
      throw DegenerateOperatingPoint(
          "algebraically degenerate operating point: converter voltage block is singular");
    const MatrixXd inv = lu.inverse();
    state_map = jys - jya * inv * jzs;
    inj_map = jya * inv;
  }
  AlgebraicElimination el;
  el.ap1 = state_map.block(0, 0, n_sg, n_sg);
  el.ap2 = state_map.block(0, n_sg, n_sg, n_sg);
  el.ai1 = state_map.block(n_sg, 0, n_sg, n_sg);
  el.ai2 = state_map.block(n_sg, n_sg, n_sg, n_sg);
  el.ap3 = inj_map.block(0, 0, n_sg, n_vsc);
  el.ap4 = inj_map.block(0, n_vsc, n_sg, n_vsc);
  el.ai3 = inj_map.block(n_sg, 0, n_sg, n_vsc);
  el.ai4 = inj_map.block(n_sg, n_vsc, n_sg, n_vsc);
  return el;
}

LinearSystem build_continuous(const NetworkDescription& net, const OperatingPoint& op) {
  const ReducedNetwork red = reduce_network(net);
  const AlgebraicElimination el =
      eliminate_algebraic(power_flow_jacobian(red, op), net.n_sg(), net.n_vsc());
  const int ng = net.n_sg();
  const int nv = net.n_vsc();
  LinearSystem sys;
  sys.n_sg = ng;
  sys.n_vsc = nv;
  sys.ac = MatrixXd::Zero(4 * ng, 4 * ng);
  sys.bc = MatrixXd::Zero(4 * ng, ng + nv);
  for (int i = 0; i < ng; ++i) {
    const SgParams& p = net.generators[i].params;
    const int d = 4 * i, w = d + 1, e = d + 2, f = d + 3;
    const double two_h = 2.0 * p.inertia;
    const double flux = (p.xd - p.xd_prime) / p.td0_prime;
    const double avr = p.ka * p.xd_prime / p.ta;

    sys.ac(d, w) = 1.0;
    sys.ac(w, w) = -p.damping / two_h;
    sys.ac(e, e) = -(p.xd / p.xd_prime) / p.td0_prime;
    sys.ac(e, f) = 1.0 / p.td0_prime;
    sys.ac(f, f) = -1.0 / p.ta;
    sys.ac(f, e) = -p.ka / p.ta;
    for (int l = 0; l < ng; ++l) {
      sys.ac(w, 4 * l) -= el.ap1(i, l) / two_h;
      sys.ac(w, 4 * l + 2) -= el.ap2(i, l) / two_h;
      sys.ac(e, 4 * l) += flux * el.ai1(i, l);
      sys.ac(e, 4 * l + 2) += flux * el.ai2(i, l);
      sys.ac(f, 4 * l) += avr * el.ai1(i, l);
      sys.ac(f, 4 * l + 2) += avr * el.ai2(i, l);
    }
    sys.bc(f, i) = p.ka / p.ta;
    for (int j = 0; j < nv; ++j) {
      sys.bc(w, ng + j) = -el.ap3(i, j) / two_h;
      sys.bc(e, ng + j) = flux * el.ai3(i, j);
      sys.bc(f, ng + j) = avr * el.ai3(i, j);
    }
  }
  if (!sys.ac.allFinite() || !sys.bc.allFinite())
    throw DegenerateOperatingPoint("continuous model has non-finite entries");
  return sys;
}

void DiscreteSystem::validate() const {
  if (!(dt > 0.0)) throw ValidationError("discrete system: dt must be positive");
  if (a.rows() != a.cols() || b.rows() != a.rows())
    throw ValidationError("discrete system: A/B dimensions are inconsistent");
  if (n_blocks < 1 || block_size < 1 || n_blocks * block_size != a.rows())
    throw ValidationError("discrete system: block layout does not cover the state");
  if (!a.allFinite() || !b.allFinite())
    throw ValidationError("discrete system: non-finite entries");
}

DiscreteSystem DiscreteSystem::generic(MatrixXd a, MatrixXd b, double dt) {
  DiscreteSystem s;
  s.n_blocks = 1;
  s.block_size = static_cast<int>(a.rows());
  s.a = std::move(a);
  s.b = std::move(b);
  s.dt = dt;
  s.validate();
  return s;
}

DiscreteSystem discretize(const LinearSystem& sys, double dt) {
  auto [a, b] = zero_order_hold(sys.ac, sys.bc, dt);
  DiscreteSystem d;
  d.a = std::move(a);
  d.b = std::move(b);
  d.dt = dt;
  d.n_blocks = std::max(sys.n_sg, 1);
  d.block_size = sys.n_sg > 0 ? 4 : static_cast<int>(sys.ac.rows());
  return d;
}

namespace {

// Field-voltage and set-point values that make the flux and exciter rows
// stationary at the given internal voltage and d-axis current.
double equilibrium_vref(const SgParams& p, double e, double id) {
  const double efd = (p.xd / p.xd_prime) * e - (p.xd - p.xd_prime) * id;
  return e - p.xd_prime * id + efd / p.ka;
}

}  // namespace

double operating_point_residual(const NetworkDescription& net, const OperatingPoint& op) {
  const ReducedNetwork red = reduce_network(net);
  const AlgebraicOutputs out = algebraic_outputs(red, op);
  double worst = 0.0;
  for (int i = 0; i < net.n_sg(); ++i) {
    const SgParams& p = net.generators[i].params;
    worst = std::max(worst, std::abs(out.pe(i) - p.pm));
    worst = std::max(worst, std::abs(equilibrium_vref(p, op.e(i), out.id(i)) - p.vref));
  }
  for (int j = 0; j < net.n_vsc(); ++j) {
    worst = std::max(worst, std::abs(out.pv(j) - net.vscs[j].p));
    worst = std::max(worst, std::abs(out.qv(j) - net.vscs[j].q));
  }
  return worst;
}

OperatingPoint settle_operating_point(NetworkDescription& net, const OperatingPoint& guess) {
  const ReducedNetwork red = reduce_network(net);
  const int ng = net.n_sg();
  const int nv = net.n_vsc();
  if (ng < 1) throw ValidationError("settle_operating_point: need a reference generator");
  guess.validate(ng, nv);

  // Unknowns: delta[1:], theta, V. Rows of the full Jacobian: Pe[1:], Pv, Qv.
  std::vector<int> cols, rows;
  for (int i = 1; i < ng; ++i) cols.push_back(i);
  for (int j = 0; j < 2 * nv; ++j) cols.push_back(2 * ng + j);
  for (int i = 1; i < ng; ++i) rows.push_back(i);
  for (int j = 0; j < 2 * nv; ++j) rows.push_back(2 * ng + j);
  const int nu = static_cast<int>(cols.size());

  OperatingPoint op = guess;
  auto mismatch = [&](const OperatingPoint& x) {
    const AlgebraicOutputs out = algebraic_outputs(red, x);
    VectorXd f(nu);
    int k = 0;
    for (int i = 1; i < ng; ++i) f(k++) = out.pe(i) - net.generators[i].params.pm;
    for (int j = 0; j < nv; ++j) f(k++) = out.pv(j) - net.vscs[j].p;
    for (int j = 0; j < nv; ++j) f(k++) = out.qv(j) - net.vscs[j].q;
    return f;
  };
  auto apply = [&](OperatingPoint& x, const VectorXd& step, double scale) {
    int k = 0;
    for (int i = 1; i < ng; ++i) x.delta(i) += scale * step(k++);
    for (int j = 0; j < nv; ++j) x.theta(j) += scale * step(k++);
    for (int j = 0; j < nv; ++j) x.v(j) += scale * step(k++);
  };

  if (nu > 0) {
    VectorXd f = mismatch(op);
    bool converged = f.cwiseAbs().maxCoeff() < 1e-12;
    for (int it = 0; it < 60 && !converged; ++it) {
      const MatrixXd full = power_flow_jacobian(red, op);
      MatrixXd jac(nu, nu);
      for (int r = 0; r < nu; ++r)
        for (int c = 0; c < nu; ++c) jac(r, c) = full(rows[r], cols[c]);
      const VectorXd step = -jac.fullPivLu().solve(f);
      if (!step.allFinite()) break;
      double scale = 1.0;
      OperatingPoint trial = op;
      for (int backtrack = 0; backtrack < 30; ++backtrack) {
        trial = op;
        apply(trial, step, scale);
        if ((trial.v.array() > 0.0).all()) {
          const VectorXd ft = mismatch(trial);
          if (ft.allFinite() && ft.norm() < f.norm() * (1.0 - 1e-4 * scale)) {
            f = ft;
            break;
          }
        }
        scale *= 0.5;
      }
      op = trial;
      converged = f.cwiseAbs().maxCoeff() < 1e-12;
      if (scale < 1e-8) break;
    }
    if (!converged || f.cwiseAbs().maxCoeff() > 1e-10)
      throw DegenerateOperatingPoint(fmt::format(
          "operating point did not settle (mismatch {:.3e})", f.cwiseAbs().maxCoeff()));
  }

  const AlgebraicOutputs out = algebraic_outputs(red, op);
  net.generators[0].params.pm = out.pe(0);
  for (int i = 0; i < ng; ++i) {
    SgParams& p = net.generators[i].params;
    p.vref = equilibrium_vref(p, op.e(i), out.id(i));
  }
  return op;
}

std::vector<std::string> state_names(int n_sg) {
  std::vector<std::string> names;
  for (int i = 1; i <= n_sg; ++i) {
    names.push_back(fmt::format("delta{}", i));
    names.push_back(fmt::format("omega{}", i));
    names.push_back(fmt::format("E{}", i));
    names.push_back(fmt::format("Efd{}", i));
  }
  return names;
}

std::vector<std::string> input_names(int n_sg, int n_vsc) {
  std::vector<std::string> names;
  for (int i = 1; i <= n_sg; ++i) names.push_back(fmt::format("dVref{}", i));
  for (int j = 1; j <= n_vsc; ++j) names.push_back(fmt::format("dPv{}", j));
  return names;
}

}  // namespace wadc
