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

#include "mss/rng.hpp"

#include <stdexcept>
#include <unordered_map>

namespace mss {

namespace {
constexpr uint64_t kPhiloxM = 0xD2B74407B1CE6E93ULL;
constexpr uint64_t kPhiloxW = 0x9E3779B97F4A7C15ULL;

inline void philox_round(uint64_t& x0, uint64_t& x1, uint64_t key) {
  const __uint128_t prod = static_cast<__uint128_t>(kPhiloxM) * x0;
  const auto hi = static_cast<uint64_t>(prod >> 64);
  const auto lo = static_cast<uint64_t>(prod);
  x0 = hi ^ key ^ x1;
  x1 = lo;
}
}  // namespace

void Rng::refill() {
  uint64_t x0 = ctr_lo_, x1 = ctr_hi_;
  uint64_t k = key_;
  for (int r = 0; r < 10; ++r) {
    philox_round(x0, x1, k);
    k += kPhiloxW;
  }
  out_[0] = x0;
  out_[1] = x1;
  pos_ = 0;
  if (++ctr_lo_ == 0) ++ctr_hi_;
}

std::vector<uint32_t> sample_distinct_excluding(uint32_t n, uint32_t excluded,
                                                uint32_t count, Rng& rng) {
  const uint32_t domain = excluded < n ? n - 1 : n;
  if (count > domain) throw std::invalid_argument("sample_distinct_excluding: count too large");
  std::vector<uint32_t> out(count);
  std::unordered_map<uint32_t, uint32_t> swapped;
  swapped.reserve(2 * count);
  auto get = [&](uint32_t pos) {
    auto it = swapped.find(pos);
    return it == swapped.end() ? pos : it->second;
  };
  for (uint32_t i = 0; i < count; ++i) {
    const auto j = static_cast<uint32_t>(i + rng.below(domain - i));
    const uint32_t vj = get(j);
    swapped[j] = get(i);
    // Map from the reduced index space back to [0, n) \ {excluded}.
    out[i] = (excluded < n && vj >= excluded) ? vj + 1 : vj;
  }
  return out;
}

}  // namespace mss
