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

#include <json.hpp>

#include <string>
#include <string_view>

#include "wadc/netmodel.hpp"

namespace wadc {

/// Parses JSON text; syntax errors become ValidationError with the line
/// and column of the offending byte.
nlohmann::json parse_json_text(const std::string& text, std::string_view source);

struct NetworkFile {
  NetworkDescription net;
  OperatingPoint op;
};

/// Sections `buses`, `branches` (from, to, g, b), `generators` (bus, H, D,
/// xd, xdp, Tdp, Ta, Ka, Pm, Vbar), `vscs` (bus, Pv, Qv) and
/// `operating_point` (E, delta, V, theta).
NetworkFile network_from_json(const nlohmann::json& doc);
nlohmann::json network_to_json(const NetworkDescription& net, const OperatingPoint& op);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j, std::string_view what);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j, std::string_view what);

}  // namespace wadc
