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

#include "wadc/comms.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "wadc/error.hpp"

namespace wadc {

SparsityMask::SparsityMask(int rows, int cols, int block_size)
    : rows_(rows), cols_(cols), block_size_(block_size),
      bits_(static_cast<std::size_t>(rows) * cols, 0) {
  if (rows < 0 || cols < 0 || block_size < 1 || cols % block_size != 0)
    throw ValidationError("sparsity mask: columns must be a multiple of the block size");
}

SparsityMask SparsityMask::full(int rows, int cols, int block_size) {
  SparsityMask m(rows, cols, block_size);
  std::fill(m.bits_.begin(), m.bits_.end(), 1);
  return m;
}

void SparsityMask::set_block(int controller, int unit, bool on) {
  for (int k = 0; k < block_size_; ++k) set(controller, unit * block_size_ + k, on);
}

int SparsityMask::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool SparsityMask::is_block_constant() const {
  for (int r = 0; r < rows_; ++r)
    for (int u = 0; u < n_units(); ++u)
      for (int k = 1; k < block_size_; ++k)
        if ((*this)(r, u * block_size_ + k) != (*this)(r, u * block_size_)) return false;
  return true;
}

void SparsityMask::project(MatrixXd& k) const {
  if (k.rows() != rows_ || k.cols() != cols_) throw ValidationError("gain shape does not match its mask");
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c)
      if (!(*this)(r, c)) k(r, c) = 0.0;
}

bool SparsityMask::admits(const MatrixXd& k) const {
  if (k.rows() != rows_ || k.cols() != cols_) return false;
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c)
      if (!(*this)(r, c) && k(r, c) != 0.0) return false;
  return true;
}

MatrixXd SparsityMask::as_matrix() const {
  MatrixXd m(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c) ? 1.0 : 0.0;
  return m;
}

CommGraph CommGraph::complete(int n_sg, int n_vsc) {
  CommGraph g;
  g.n_sg = n_sg;
  g.n_vsc = n_vsc;
  g.area.assign(n_sg + n_vsc, 0);
  g.link.assign(n_sg + n_vsc, std::vector<char>(n_sg, 1));
  return g;
}

CommGraph CommGraph::local_only(int n_sg, int n_vsc) {
  CommGraph g = complete(n_sg, n_vsc);
  for (auto& row : g.link) std::fill(row.begin(), row.end(), 0);
  return g;
}

CommGraph CommGraph::from_areas(int n_sg, int n_vsc, std::vector<int> area,
                                const std::vector<std::pair<int, int>>& area_links) {
  if (static_cast<int>(area.size()) != n_sg + n_vsc)
    throw ValidationError(fmt::format("communication graph: expected {} area entries, got {}",
                                      n_sg + n_vsc, area.size()));
  CommGraph g = local_only(n_sg, n_vsc);
  g.area = std::move(area);
  auto neighbours = [&](int a, int b) {
    if (a == b) return true;
    for (auto [x, y] : area_links)
      if ((x == a && y == b) || (x == b && y == a)) return true;
    return false;
  };
  for (int l = 0; l < n_sg + n_vsc; ++l)
    for (int i = 0; i < n_sg; ++i) g.link[l][i] = neighbours(g.area[l], g.area[i]) ? 1 : 0;
  return g;
}

SparsityMask mask_from_graph(const CommGraph& graph) {
  SparsityMask mask(graph.n_controllers(), 4 * graph.n_sg, 4);
  for (int l = 0; l < graph.n_controllers(); ++l)
    for (int i = 0; i < graph.n_sg; ++i)
      mask.set_block(l, i, graph.link[l][i] != 0 || l == i);
  return mask;
}

int DelayProfile::lag(int controller, int unit) const {
  if (controller == unit) return 0;
  if (!per_link.empty()) return per_link[controller][unit];
  return steps[unit];
}

int DelayProfile::max_lag() const {
  int m = 0;
  for (int h : steps) m = std::max(m, h);
  for (const auto& row : per_link)
    for (int h : row) m = std::max(m, h);
  return m;
}

namespace {

int max_steps(double max_delay_s, double dt) {
  if (!(max_delay_s >= 0.0)) throw ValidationError("delay bound must be nonnegative");
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  return static_cast<int>(std::lround(max_delay_s / dt));
}

int draw_steps(Rng& rng, int hmax) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int h = static_cast<int>(std::floor(unit(rng) * (hmax + 1)));
  return std::min(h, hmax);
}

}  // namespace

DelayProfile sample_delays(double max_delay_s, double dt, int n_units, std::uint64_t seed) {
  const int hmax = max_steps(max_delay_s, dt);
  DelayProfile p;
  p.max_delay_s = max_delay_s;
  p.seed = seed;
  Rng rng(seed);
  for (int i = 0; i < n_units; ++i) p.steps.push_back(draw_steps(rng, hmax));
  return p;
}

DelayProfile sample_link_delays(double max_delay_s, double dt, int n_controllers, int n_units,
                                std::uint64_t seed) {
  const int hmax = max_steps(max_delay_s, dt);
  DelayProfile p;
  p.max_delay_s = max_delay_s;
  p.seed = seed;
  p.steps.assign(n_units, hmax);
  Rng rng(seed);
  p.per_link.assign(n_controllers, std::vector<int>(n_units, 0));
  for (auto& row : p.per_link)
    for (int& h : row) h = draw_steps(rng, hmax);
  return p;
}

StateHistory::StateHistory(const VectorXd& x0, int max_lag)
    : buf_(static_cast<std::size_t>(std::max(max_lag, 0)) + 1, x0) {}

void StateHistory::push(const VectorXd& x) {
  head_ = (head_ + 1) % capacity();
  buf_[head_] = x;
}

const VectorXd& StateHistory::at_lag(int lag) const {
  if (lag < 0 || lag >= capacity()) throw ValidationError("state history: lag exceeds capacity");
  return buf_[(head_ - lag + capacity()) % capacity()];
}

VectorXd delayed_view(const StateHistory& history, const DelayProfile& profile, int controller,
                      int n_units, int block_size) {
  VectorXd view(n_units * block_size);
  for (int i = 0; i < n_units; ++i)
    view.segment(i * block_size, block_size) =
        history.at_lag(profile.lag(controller, i)).segment(i * block_size, block_size);
  return view;
}

void PacketLossModel::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("packet loss probability must lie in [0, 1]");
}

LossChannel::LossChannel(PacketLossModel model, int n_controllers, int n_units, std::uint64_t seed)
    : model_(model), n_controllers_(n_controllers), n_units_(n_units), rng_(seed),
      flags_(model.per_link ? static_cast<std::size_t>(n_controllers) * n_units : 1, 1) {
  model_.validate();
}

void LossChannel::next_step() {
  if (lossless()) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (char& f : flags_) f = unit(rng_) < model_.p ? 0 : 1;
}

bool LossChannel::delivered(int controller, int unit) const {
  if (!model_.per_link) return flags_[0] != 0;
  return flags_[static_cast<std::size_t>(controller) * n_units_ + unit] != 0;
}

std::vector<VectorXd> apply_loss(const PacketLossModel& model, const std::vector<VectorXd>& stream,
                                 std::uint64_t seed) {
  std::vector<VectorXd> out;
  if (stream.empty()) return out;
  LossChannel channel(PacketLossModel{model.p, false}, 1, 1, seed);
  VectorXd held = stream.front();
  out.reserve(stream.size());
  for (const VectorXd& x : stream) {
    channel.next_step();
    if (channel.delivered(0, 0)) held = x;
    out.push_back(held);
  }
  return out;
}

namespace {

bool block_is_zero(const MatrixXd& k, int row, int unit, int block_size) {
  for (int c = 0; c < block_size; ++c)
    if (k(row, unit * block_size + c) != 0.0) return false;
  return true;
}

double block_dot(const MatrixXd& k, int row, int unit, int block_size, const VectorXd& x) {
  double s = 0.0;
  const int base = unit * block_size;
  for (int c = 0; c < block_size; ++c) s += k(row, base + c) * x(base + c);
  return s;
}

}  // namespace

FeedbackChannel::FeedbackChannel(const MatrixXd& k, int n_units, int block_size, DelayProfile delays,
                                 PacketLossModel loss, std::uint64_t loss_seed, const VectorXd& x0)
    : k_(k), n_units_(n_units), block_size_(block_size), delays_(std::move(delays)),
      loss_(loss, static_cast<int>(k.rows()), n_units, loss_seed),
      history_(x0, delays_.max_lag()),
      active_(static_cast<std::size_t>(k.rows()) * n_units, 0),
      held_(MatrixXd::Zero(k.rows(), n_units)) {
  if (k.cols() != n_units * block_size || x0.size() != k.cols())
    throw ValidationError("feedback channel: gain and state dimensions disagree");
  if (static_cast<int>(delays_.steps.size()) != n_units)
    throw ValidationError("feedback channel: delay profile does not match the number of units");
  for (int l = 0; l < k.rows(); ++l)
    for (int i = 0; i < n_units; ++i) {
      const bool on = !block_is_zero(k_, l, i, block_size_);
      active_[static_cast<std::size_t>(l) * n_units + i] = on;
      if (on) held_(l, i) = block_dot(k_, l, i, block_size_, x0);
    }
}

void FeedbackChannel::control(const VectorXd& x, VectorXd& u) {
  if (started_) history_.push(x);
  started_ = true;
  loss_.next_step();
  const int n_ctrl = static_cast<int>(k_.rows());
  u.resize(n_ctrl);
  for (int l = 0; l < n_ctrl; ++l) {
    double s = 0.0;
    for (int i = 0; i < n_units_; ++i) {
      if (!active_[static_cast<std::size_t>(l) * n_units_ + i]) continue;
      if (loss_.delivered(l, i))
        held_(l, i) = block_dot(k_, l, i, block_size_, history_.at_lag(delays_.lag(l, i)));
      s += held_(l, i);
    }
    u(l) = -s;
  }
}

void dense_feedback(const MatrixXd& k, int n_units, int block_size, const VectorXd& x, VectorXd& u) {
  const int n_ctrl = static_cast<int>(k.rows());
  u.resize(n_ctrl);
  for (int l = 0; l < n_ctrl; ++l) {
    double s = 0.0;
    for (int i = 0; i < n_units; ++i) {
      if (block_is_zero(k, l, i, block_size)) continue;
      s += block_dot(k, l, i, block_size, x);
    }
    u(l) = -s;
  }
}

}  // namespace wadc
