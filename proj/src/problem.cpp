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

#include "wadc/problem.hpp"

#include <cmath>

#include "wadc/error.hpp"

namespace wadc {

CostWeights::CostWeights(MatrixXd q_, MatrixXd r_) : q(std::move(q_)), r(std::move(r_)) {
  validate();
}

CostWeights CostWeights::identity(int n, int m) {
  return CostWeights(MatrixXd::Identity(n, n), MatrixXd::Identity(m, m));
}

void CostWeights::validate() const {
  if (q.rows() != q.cols() || r.rows() != r.cols())
    throw ValidationError("cost weights must be square");
  if (!is_symmetric(q) || !is_psd(q)) throw ValidationError("state weight Q must be symmetric PSD");
  if (!is_symmetric(r) || !is_pd(r)) throw ValidationError("input weight R must be symmetric PD");
}

NoiseMoments NoiseMoments::zero(int n) {
  NoiseMoments m;
  m.mean = VectorXd::Zero(n);
  m.w = MatrixXd::Zero(n, n);
  m.m3 = VectorXd::Zero(n);
  return m;
}

void NoiseMoments::validate() const {
  const int n = dim();
  if (w.cols() != n || mean.size() != n || m3.size() != n)
    throw ValidationError("noise moments have inconsistent dimensions");
  if (!is_symmetric(w, 1e-9) || !is_psd(w, 1e-9)) throw ValidationError("noise covariance must be PSD");
  if (!(m4 >= 0.0) || !std::isfinite(m4)) throw ValidationError("fourth moment must be finite and nonnegative");
}

double NoiseMoments::c_bar(double c, const MatrixXd& q) const {
  const MatrixXd wq = w * q;
  return c - m4 + 4.0 * (wq * wq).trace();
}

GainMatrix::GainMatrix(MatrixXd k, SparsityMask mask) : k_(std::move(k)), mask_(std::move(mask)) {
  if (!mask_.admits(k_)) throw ValidationError("gain has nonzero entries outside its sparsity mask");
}

GainMatrix GainMatrix::zeros(SparsityMask mask) {
  MatrixXd k = MatrixXd::Zero(mask.rows(), mask.cols());
  return GainMatrix(std::move(k), std::move(mask));
}

void GainMatrix::step(const MatrixXd& g, double eta) {
  k_.noalias() -= eta * g;
  mask_.project(k_);
}

void GainMatrix::assign_projected(MatrixXd k) {
  mask_.project(k);
  k_ = std::move(k);
}

}  // namespace wadc
