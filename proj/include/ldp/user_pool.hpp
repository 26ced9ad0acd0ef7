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

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldp/errors.hpp"

namespace ldp {

// One contiguous run of users handed to a single local mechanism, with the
// privacy budget that mechanism spends per user.
struct AuditSpan {
  std::size_t first = 0;
  std::size_t count = 0;
  std::string mechanism;
  double epsilon = 0.0;
  double delta = 0.0;
};

// Ordered sample of per-user values with one-shot consumption semantics: each
// index can be handed to a local randomizer at most once, in order. All
// consumption goes through take()/discard(), which append to an audit log so
// per-user budget sums are checkable after a run. Not safe for concurrent
// mutation; concurrent pipelines must partition index ranges up front.
class UserPool {
 public:
  explicit UserPool(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  std::size_t consumed() const { return cursor_; }
  std::size_t remaining() const { return values_.size() - cursor_; }

  // Next k unconsumed users, in order. `mechanism` names the local randomizer
  // they are fed to and (epsilon, delta) is the per-user budget it spends.
  std::span<const double> take(std::size_t k, std::string mechanism, double epsilon,
                               double delta = 0.0) {
    if (k > remaining()) {
      throw PoolExhaustedError("UserPool: requested " + std::to_string(k) + " users, only " +
                               std::to_string(remaining()) + " of " +
                               std::to_string(values_.size()) + " remain");
    }
    audit_.push_back(AuditSpan{cursor_, k, std::move(mechanism), epsilon, delta});
    std::span<const double> out(values_.data() + cursor_, k);
    cursor_ += k;
    return out;
  }

  // Consume k users without querying them (budget-free): unused remainder of
  // a batch partition.
  void discard(std::size_t k) { take(k, "discarded", 0.0, 0.0); }

  const std::vector<AuditSpan>& audit_log() const { return audit_; }

  // One JSON object per consumed user:
  // {"user_index":..,"mechanism_name":"..","epsilon":..,"delta":..}
  void write_audit_jsonl(std::ostream& os) const;

 private:
  std::vector<double> values_;
  std::size_t cursor_ = 0;
  std::vector<AuditSpan> audit_;
};

namespace internal {

// Shortest round-trip decimal form, locale-independent.
inline std::string DoubleToString(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace internal

inline void UserPool::write_audit_jsonl(std::ostream& os) const {
  for (const AuditSpan& span : audit_) {
    for (std::size_t i = 0; i < span.count; ++i) {
      os << "{\"user_index\":" << (span.first + i) << ",\"mechanism_name\":\"" << span.mechanism
         << "\",\"epsilon\":" << internal::DoubleToString(span.epsilon)
         << ",\"delta\":" << internal::DoubleToString(span.delta) << "}\n";
    }
  }
}

}  // namespace ldp
