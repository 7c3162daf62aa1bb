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

#include <cstdint>
#include <utility>
#include <vector>

#include "wadc/linalg.hpp"
#include "wadc/seed.hpp"

namespace wadc {

/// Boolean pattern over a (controllers x states) gain. Entries come in
/// 1 x block_size blocks, one per (controller, measured unit) pair.
class SparsityMask {
 public:
  SparsityMask() = default;
  SparsityMask(int rows, int cols, int block_size = 1);

  static SparsityMask full(int rows, int cols, int block_size = 1);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int block_size() const { return block_size_; }
  int n_units() const { return block_size_ > 0 ? cols_ / block_size_ : 0; }

  bool operator()(int r, int c) const { return bits_[static_cast<std::size_t>(r) * cols_ + c] != 0; }
  void set(int r, int c, bool on) { bits_[static_cast<std::size_t>(r) * cols_ + c] = on ? 1 : 0; }
  void set_block(int controller, int unit, bool on);
  bool block(int controller, int unit) const { return (*this)(controller, unit * block_size_); }

  /// Number of free entries.
  int count() const;
  bool is_block_constant() const;

  /// Zeroes every masked-out entry of `k` in place.
  void project(MatrixXd& k) const;
  /// True when every masked-out entry of `k` is exactly zero.
  bool admits(const MatrixXd& k) const;
  MatrixXd as_matrix() const;

  bool operator==(const SparsityMask&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int block_size_ = 1;
  std::vector<std::uint8_t> bits_;
};

/// Which generator states each controller can receive. Controllers are the
/// generators (indices 0..Ng-1) followed by the converters.
struct CommGraph {
  int n_sg = 0;
  int n_vsc = 0;
  std::vector<int> area;               // per controller node
  std::vector<std::vector<char>> link; // link[controller][sg]

  int n_controllers() const { return n_sg + n_vsc; }
  void set_link(int sg, int controller, bool on) { link.at(controller).at(sg) = on ? 1 : 0; }

  static CommGraph complete(int n_sg, int n_vsc);
  static CommGraph local_only(int n_sg, int n_vsc);
  /// Controller l receives SG i when their areas are equal or listed as
  /// neighbours in `area_links`.
  static CommGraph from_areas(int n_sg, int n_vsc, std::vector<int> area,
                              const std::vector<std::pair<int, int>>& area_links);
};

/// Block (l, i) is free iff SG i reaches controller l, or l is SG i itself.
SparsityMask mask_from_graph(const CommGraph& graph);

/// Whole-step transmission delays. Uniform per measured unit by default; an
/// optional controller x unit matrix gives per-link delays.
struct DelayProfile {
  std::vector<int> steps;                    // h_i per unit
  std::vector<std::vector<int>> per_link;    // optional [controller][unit]
  double max_delay_s = 0.0;
  std::uint64_t seed = 0;

  static DelayProfile none(int n_units) { return {std::vector<int>(n_units, 0), {}, 0.0, 0}; }

  /// Steps of staleness of unit `unit` as seen by `controller`; the local
  /// unit of a co-located controller is always fresh.
  int lag(int controller, int unit) const;
  int max_lag() const;
  bool is_zero() const { return max_lag() == 0; }
};

/// h_i uniform on {0, ..., round(max_delay_s / dt)}. Drawn as
/// floor(u_i * (hmax + 1)) from one uniform u_i per unit, so profiles for
/// the same seed are monotone in max_delay_s.
DelayProfile sample_delays(double max_delay_s, double dt, int n_units, std::uint64_t seed);
DelayProfile sample_link_delays(double max_delay_s, double dt, int n_controllers, int n_units,
                                std::uint64_t seed);

/// Fixed-capacity history of past states; reads before the first push
/// beyond the start return the initial state.
class StateHistory {
 public:
  StateHistory(const VectorXd& x0, int max_lag);
  void push(const VectorXd& x);
  /// x_{t - lag} where t is the time of the latest push.
  const VectorXd& at_lag(int lag) const;
  int capacity() const { return static_cast<int>(buf_.size()); }

 private:
  std::vector<VectorXd> buf_;
  int head_ = 0;
};

/// The state vector available at `controller` at the current time.
VectorXd delayed_view(const StateHistory& history, const DelayProfile& profile, int controller,
                      int n_units, int block_size);

struct PacketLossModel {
  double p = 0.0;           // probability that a packet is lost
  bool per_link = false;    // independent loss per (controller, unit) link
  void validate() const;
};

/// Bernoulli delivery flags, one draw per step (or per link and step).
/// A link is lost at step t when u_t < p, so the loss pattern for a seed is
/// nested in p.
class LossChannel {
 public:
  LossChannel(PacketLossModel model, int n_controllers, int n_units, std::uint64_t seed);
  void next_step();
  bool delivered(int controller, int unit) const;
  bool lossless() const { return model_.p <= 0.0; }

 private:
  PacketLossModel model_;
  int n_controllers_;
  int n_units_;
  Rng rng_;
  std::vector<char> flags_;
};

/// Hold-last-sample stream; the value before the first delivery is x0.
std::vector<VectorXd> apply_loss(const PacketLossModel& model, const std::vector<VectorXd>& stream,
                                 std::uint64_t seed);

/// Measurement path from plant states to u = -K x_hat, applying delays and
/// packet loss per (controller, unit) block. Masked (all-zero) gain blocks
/// never read their state block.
class FeedbackChannel {
 public:
  FeedbackChannel(const MatrixXd& k, int n_units, int block_size, DelayProfile delays,
                  PacketLossModel loss, std::uint64_t loss_seed, const VectorXd& x0);

  /// Records x_t as the newest measurement and writes u_t.
  void control(const VectorXd& x, VectorXd& u);
  const StateHistory& history() const { return history_; }

 private:
  MatrixXd k_;
  int n_units_;
  int block_size_;
  DelayProfile delays_;
  LossChannel loss_;
  StateHistory history_;
  std::vector<char> active_;  // [controller * n_units + unit]
  MatrixXd held_;             // held per-block contributions K_li * x_hat_i
  bool started_ = false;
};

/// u = -K x with the same block summation order as FeedbackChannel.
void dense_feedback(const MatrixXd& k, int n_units, int block_size, const VectorXd& x, VectorXd& u);

}  // namespace wadc
