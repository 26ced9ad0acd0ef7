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

#include <cstdint>

namespace ldp {

namespace internal {

// SplitMix64 finalizer, used to seed streams and derive substream ids.
inline constexpr std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t Rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace internal

// Deterministic random stream identified by (seed, stream_id).
//
// The same (seed, stream_id) pair always yields the bit-identical sequence of
// draws; distinct stream_ids from one seed give statistically independent
// streams. The generator is xoshiro256++ whose 256-bit state is filled by a
// SplitMix64 chain over the two identifiers, so streams land at effectively
// random points of the 2^256-state cycle. A stream must not be shared across
// concurrent tasks; derive one stream per task instead.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t x = seed ^ internal::SplitMix64(stream_id);
    for (auto& word : state_) {
      x = internal::SplitMix64(x);
      word = x;
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream, independent of this stream's draw position. Calling with
  // the same id always yields the same child.
  RngStream substream(std::uint64_t id) const {
    return RngStream(seed_, internal::SplitMix64(stream_id_ ^ internal::SplitMix64(id)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = internal::Rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = internal::Rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe as input to inverse CDFs.
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_[4];
};

}  // namespace ldp
