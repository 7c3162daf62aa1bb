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

#include "wadc/comms.hpp"
#include "wadc/linalg.hpp"

namespace wadc {

/// Quadratic weights of the LQR objective.
struct CostWeights {
  MatrixXd q;  // state weight, PSD
  MatrixXd r;  // input weight, PD

  CostWeights() = default;
  CostWeights(MatrixXd q_, MatrixXd r_);  // validates
  static CostWeights identity(int n, int m);
  void validate() const;
};

/// First four moments of the perturbation entering the closed loop, taken
/// with respect to a given state weight Q.
struct NoiseMoments {
  VectorXd mean;     // xi_bar
  MatrixXd w;        // covariance
  VectorXd m3;       // E[e e' Q e], e = xi - xi_bar
  double m4 = 0.0;   // E[(e' Q e - tr(W Q))^2]
  double m4_stderr = 0.0;
  double m3_stderr = 0.0;  // largest entry-wise standard error
  long samples = 0;        // 0 for closed-form moments
  std::string source = "nominal";

  int dim() const { return static_cast<int>(w.rows()); }
  static NoiseMoments zero(int n);
  void validate() const;

  /// Threshold the quadratic risk form is compared against:
  /// c - m4 + 4 tr((W Q)^2).
  double c_bar(double c, const MatrixXd& q) const;
};

/// Feedback gain with an attached sparsity pattern. Every mutation keeps
/// masked-out entries at exactly zero.
class GainMatrix {
 public:
  GainMatrix() = default;
  /// Throws ValidationError when `k` has nonzeros outside `mask`.
  GainMatrix(MatrixXd k, SparsityMask mask);
  static GainMatrix zeros(SparsityMask mask);

  const MatrixXd& k() const { return k_; }
  const SparsityMask& mask() const { return mask_; }
  int n_free() const { return mask_.count(); }

  /// K <- K - eta * G, then re-projects onto the mask.
  void step(const MatrixXd& g, double eta);
  /// Replaces K by the projection of `k` onto the mask.
  void assign_projected(MatrixXd k);

 private:
  MatrixXd k_;
  SparsityMask mask_;
};

}  // namespace wadc
