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

#include "wadc/network_io.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "wadc/error.hpp"

namespace wadc {

using nlohmann::json;

json parse_json_text(const std::string& text, std::string_view source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    const auto last_nl = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    const std::size_t col = last_nl == std::string::npos || pos == 0 ? pos + 1 : pos - last_nl;
    throw ValidationError(fmt::format("{}:{}:{}: invalid JSON ({})", source, line, col, e.what()));
  }
}

namespace {

double number(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) throw ValidationError(fmt::format("{}: missing field '{}'", where, key));
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(fmt::format("{}: field '{}' must be a number", where, key));
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, std::string_view where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

int integer(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer())
    throw ValidationError(fmt::format("{}: field '{}' must be an integer", where, key));
  return obj.at(key).get<int>();
}

const json& array_section(const json& doc, const char* key, bool required) {
  static const json empty = json::array();
  if (!doc.contains(key)) {
    if (required) throw ValidationError(fmt::format("network: missing section '{}'", key));
    return empty;
  }
  if (!doc.at(key).is_array()) throw ValidationError(fmt::format("network: '{}' must be an array", key));
  return doc.at(key);
}

}  // namespace

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, std::string_view what) {
  if (!j.is_array()) throw ValidationError(fmt::format("{}: expected an array of rows", what));
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ValidationError(fmt::format("{}: row {} has the wrong length", what, i));
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& v = row.at(static_cast<std::size_t>(k));
      if (!v.is_number()) throw ValidationError(fmt::format("{}: non-numeric entry ({}, {})", what, i, k));
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vector_from_json(const json& j, std::string_view what) {
  if (!j.is_array()) throw ValidationError(fmt::format("{}: expected an array", what));
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(fmt::format("{}: entry {} is not a number", what, i));
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

NetworkFile network_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("network: top level must be an object");
  NetworkFile file;
  NetworkDescription& net = file.net;
  for (const json& b : array_section(doc, "buses", true)) {
    Bus bus;
    bus.id = integer(b, "id", "bus");
    bus.area = b.contains("area") ? integer(b, "area", "bus") : 0;
    bus.g_shunt = number_or(b, "gsh", 0.0, "bus");
    bus.b_shunt = number_or(b, "bsh", 0.0, "bus");
    net.buses.push_back(bus);
  }
  for (const json& b : array_section(doc, "branches", true))
    net.branches.push_back({integer(b, "from", "branch"), integer(b, "to", "branch"),
                            number(b, "g", "branch"), number(b, "b", "branch")});
  for (const json& g : array_section(doc, "generators", false)) {
    Generator gen;
    gen.bus = integer(g, "bus", "generator");
    SgParams& p = gen.params;
    p.inertia = number(g, "H", "generator");
    p.damping = number(g, "D", "generator");
    p.xd = number(g, "xd", "generator");
    p.xd_prime = number(g, "xdp", "generator");
    p.td0_prime = number(g, "Tdp", "generator");
    p.ta = number(g, "Ta", "generator");
    p.ka = number(g, "Ka", "generator");
    p.pm = number(g, "Pm", "generator");
    p.vref = number(g, "Vbar", "generator");
    net.generators.push_back(gen);
  }
  for (const json& c : array_section(doc, "vscs", false))
    net.vscs.push_back({integer(c, "bus", "vsc"), number(c, "Pv", "vsc"), number(c, "Qv", "vsc")});
  net.validate();

  if (!doc.contains("operating_point") || !doc.at("operating_point").is_object())
    throw ValidationError("network: missing section 'operating_point'");
  const json& op = doc.at("operating_point");
  auto vec = [&op](const char* key, int n) {
    if (!op.contains(key)) {
      if (n == 0) return VectorXd(0);
      throw ValidationError(fmt::format("operating_point: missing '{}'", key));
    }
    VectorXd v = vector_from_json(op.at(key), fmt::format("operating_point.{}", key));
    if (v.size() != n)
      throw ValidationError(fmt::format("operating_point.{}: expected {} entries, got {}", key, n, v.size()));
    return v;
  };
  file.op.e = vec("E", net.n_sg());
  file.op.delta = vec("delta", net.n_sg());
  file.op.v = vec("V", net.n_vsc());
  file.op.theta = vec("theta", net.n_vsc());
  file.op.validate(net.n_sg(), net.n_vsc());
  return file;
}

json network_to_json(const NetworkDescription& net, const OperatingPoint& op) {
  json doc;
  doc["buses"] = json::array();
  for (const Bus& b : net.buses)
    doc["buses"].push_back({{"id", b.id}, {"area", b.area}, {"gsh", b.g_shunt}, {"bsh", b.b_shunt}});
  doc["branches"] = json::array();
  for (const Branch& b : net.branches)
    doc["branches"].push_back({{"from", b.from}, {"to", b.to}, {"g", b.g}, {"b", b.b}});
  doc["generators"] = json::array();
  for (const Generator& g : net.generators) {
    const SgParams& p = g.params;
    doc["generators"].push_back({{"bus", g.bus}, {"H", p.inertia}, {"D", p.damping}, {"xd", p.xd},
                                 {"xdp", p.xd_prime}, {"Tdp", p.td0_prime}, {"Ta", p.ta},
                                 {"Ka", p.ka}, {"Pm", p.pm}, {"Vbar", p.vref}});
  }
  doc["vscs"] = json::array();
  for (const Vsc& c : net.vscs) doc["vscs"].push_back({{"bus", c.bus}, {"Pv", c.p}, {"Qv", c.q}});
  doc["operating_point"] = {{"E", vector_to_json(op.e)},
                            {"delta", vector_to_json(op.delta)},
                            {"V", vector_to_json(op.v)},
                            {"theta", vector_to_json(op.theta)}};
  return doc;
}

}  // namespace wadc
