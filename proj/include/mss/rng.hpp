// Copyright 2026 The MSS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MSS_RNG_HPP_
#define MSS_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace mss {

// splitmix64 finalizer; used to derive stream keys from ids.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based Philox2x64-10 stream. Streams derived from distinct id
// tuples are statistically independent, so (trial, user) pairs can be
// drawn in parallel with bitwise-reproducible results.
class Rng {
 public:
  explicit Rng(uint64_t key) : key_(key) {}

  // Derives an independent stream from a root seed and an id path.
  static Rng derive(uint64_t root, std::initializer_list<uint64_t> ids) {
    uint64_t h = mix64(root ^ 0xA02B17C594D3E1FBULL);
    for (uint64_t id : ids) h = mix64(h ^ mix64(id));
    return Rng(h);
  }

  uint64_t next_u64() {
    if (pos_ == 2) refill();
    return out_[pos_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform integer in [0, bound); bound > 0. Unbiased (Lemire rejection).
  uint64_t below(uint64_t bound) {
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<uint64_t>(m);
    if (lo < bound) {
      const uint64_t t = (0 - bound) % bound;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

 private:
  void refill();

  uint64_t key_;
  uint64_t ctr_lo_ = 0, ctr_hi_ = 0;
  uint64_t out_[2] = {0, 0};
  int pos_ = 2;
};

// Uniform sample of `count` distinct values from [0, n) \ {excluded},
// via partial Fisher-Yates with a sparse swap map (O(count) expected).
// Pass excluded >= n to sample from the full range. Result is unsorted.
std::vector<uint32_t> sample_distinct_excluding(uint32_t n, uint32_t excluded,
                                                uint32_t count, Rng& rng);

}  // namespace mss

#endif  // MSS_RNG_HPP_
