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

#include "wadc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>

#include "wadc/error.hpp"

namespace wadc {

double spectral_radius(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& a, const MatrixXd& w) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || w.rows() != n || w.cols() != n)
    throw ValidationError("lyapunov: dimension mismatch");
  if (n == 0) return MatrixXd(0, 0);

  Eigen::ComplexSchur<MatrixXcd> schur(a.cast<std::complex<double>>());
  const MatrixXcd& t = schur.matrixT();
  const MatrixXcd& u = schur.matrixU();
  const MatrixXcd c = u.adjoint() * w.cast<std::complex<double>>() * u;

  MatrixXcd y(n, n);
  MatrixXcd ty(n, n);  // ty.col(l) = T * y.col(l)
  MatrixXcd m(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    VectorXcd rhs = c.col(j);
    for (Eigen::Index l = j + 1; l < n; ++l) rhs += std::conj(t(j, l)) * ty.col(l);
    m = -std::conj(t(j, j)) * t;
    m.diagonal().array() += 1.0;
    y.col(j) = m.triangularView<Eigen::Upper>().solve(rhs);
    ty.col(j) = t.triangularView<Eigen::Upper>() * y.col(j);
  }
  MatrixXd x = (u * y * u.adjoint()).real();
  return 0.5 * (x + x.transpose());
}

double lyapunov_residual(const MatrixXd& a, const MatrixXd& x, const MatrixXd& w) {
  const double scale = std::max(w.norm(), std::numeric_limits<double>::min());
  return (x - a * x * a.transpose() - w).norm() / scale;
}

DareSolution solve_dare(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q,
                        const MatrixXd& r) {
  const Eigen::Index n = a.rows();
  MatrixXd ak = a;
  MatrixXd gk = b * r.ldlt().solve(b.transpose());
  MatrixXd hk = q;
  const MatrixXd eye = MatrixXd::Identity(n, n);
  DareSolution out;
  for (int it = 1; it <= 200; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(eye + gk * hk);
    const MatrixXd w_ak = lu.solve(ak);   // (I + G H)^-1 A
    const MatrixXd w_gk = lu.solve(gk);   // (I + G H)^-1 G
    MatrixXd a_next = ak * w_ak;
    MatrixXd g_next = gk + ak * w_gk * ak.transpose();
    MatrixXd h_next = hk + ak.transpose() * hk * w_ak;
    const double change = (h_next - hk).norm();
    ak = std::move(a_next);
    gk = 0.5 * (g_next + g_next.transpose());
    hk = 0.5 * (h_next + h_next.transpose());
    out.iterations = it;
    if (!hk.allFinite()) throw DegenerateOperatingPoint("dare: doubling diverged");
    if (change <= 1e-13 * std::max(1.0, hk.norm())) break;
  }
  out.x = hk;
  const MatrixXd btx = b.transpose() * hk;
  out.gain = (r + btx * b).ldlt().solve(btx * a);
  return out;
}

std::pair<MatrixXd, MatrixXd> zero_order_hold(const MatrixXd& ac, const MatrixXd& bc,
                                              double dt) {
  if (!(dt > 0.0)) throw ValidationError("discretize: time step must be positive");
  const Eigen::Index n = ac.rows();
  const Eigen::Index m = bc.cols();
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = ac * dt;
  aug.topRightCorner(n, m) = bc * dt;
  const MatrixXd e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

bool is_symmetric(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_psd(const MatrixXd& m, double tol) {
  if (!is_symmetric(m)) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

bool is_pd(const MatrixXd& m, double tol) {
  if (!is_symmetric(m)) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > tol;
}

double compensated_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

}  // namespace wadc
