//
// Copyright 2026 The ldpmean Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <stdexcept>
#include <string>

namespace ldp {

// Invalid argument or configuration (bad parameter ranges, overlapping bins,
// malformed sweep definitions, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// An estimator's sample-size precondition is not met. Estimators refuse to
// run rather than silently degrade below their certified bound.
class InsufficientSampleError : public std::runtime_error {
 public:
  explicit InsufficientSampleError(const std::string& what) : std::runtime_error(what) {}
};

// A pool ran out of unconsumed users mid-protocol.
class PoolExhaustedError : public std::runtime_error {
 public:
  explicit PoolExhaustedError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline produced an internally inconsistent estimate (e.g. the upper
// quantile landed below the median). This happens with probability <= beta
// and is surfaced rather than patched.
class EstimationFailureError : public std::runtime_error {
 public:
  explicit EstimationFailureError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ldp
