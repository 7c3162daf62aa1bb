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

#include <stdexcept>
#include <string>

namespace wadc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input (files, flags, dimensions).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NonReducibleNetwork : public Error {
 public:
  using Error::Error;
};

class DegenerateOperatingPoint : public Error {
 public:
  using Error::Error;
};

// The initial gain does not stabilize the undelayed closed loop.
class InfeasibleStart : public Error {
 public:
  InfeasibleStart(const std::string& what, double spectral_radius)
      : Error(what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace wadc
