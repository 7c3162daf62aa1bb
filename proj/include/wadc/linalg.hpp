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

#include <Eigen/Dense>

#include <span>
#include <utility>

namespace wadc {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

double spectral_radius(const MatrixXd& a);

/// Solves X = A X A' + W for stable A (spectral radius < 1).
///
/// Complex Schur (Bartels-Stewart) method: with A = U T U^H the equation
/// becomes Y - T Y T^H = U^H W U, solved column by column from the right
/// with one triangular solve per column. The result is symmetrized.
MatrixXd solve_discrete_lyapunov(const MatrixXd& a, const MatrixXd& w);

/// Relative residual ||X - A X A' - W||_F / max(||W||_F, tiny).
double lyapunov_residual(const MatrixXd& a, const MatrixXd& x,
                         const MatrixXd& w);

/// Stabilizing solution of the discrete algebraic Riccati equation via the
/// structure-preserving doubling algorithm. Returns the LQR gain
/// K = (R + B'XB)^-1 B'XA together with X.
struct DareSolution {
  MatrixXd x;
  MatrixXd gain;
  int iterations = 0;
};
DareSolution solve_dare(const MatrixXd& a, const MatrixXd& b,
                        const MatrixXd& q, const MatrixXd& r);

/// Exact zero-order-hold discretization through the augmented matrix
/// exponential exp([[Ac, Bc], [0, 0]] dt).
std::pair<MatrixXd, MatrixXd> zero_order_hold(const MatrixXd& ac,
                                              const MatrixXd& bc, double dt);

bool is_symmetric(const MatrixXd& m, double tol = 1e-10);
bool is_psd(const MatrixXd& m, double tol = 1e-10);
bool is_pd(const MatrixXd& m, double tol = 1e-12);

/// Neumaier-compensated running sum. Summing the same values in the same
/// order is bit-reproducible.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_mean(std::span<const double> values);

}  // namespace wadc
