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

#include "mss/primes.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace mss;

TEST_CASE("primes_in_band on known bands") {
  CHECK(primes_in_band(10, 30) == std::vector<uint64_t>{11, 13, 17, 19, 23, 29});
  CHECK(primes_in_band(1.5, 2.0) == std::vector<uint64_t>{2});
  CHECK(primes_in_band(24, 28).empty());
  CHECK_THROWS_AS(primes_in_band(0, 1.5), std::invalid_argument);
}

TEST_CASE("primes_in_band agrees with a trial-division sieve") {
  // The band used by the moduli search at k=1024, ell=4, beta=20.
  const double lo = 1024.0 / (20.0 * 4.0), hi = 20.0 * 1024.0 / 4.0;
  const auto fast = primes_in_band(lo, hi);
  const auto slow = testing::trial_division_primes(13, 5120);
  CHECK(fast == slow);
}

TEST_CASE("deterministic Miller-Rabin classifies hard cases") {
  CHECK(is_prime(2));
  CHECK(is_prime(3));
  CHECK_FALSE(is_prime(1));
  CHECK_FALSE(is_prime(561));         // Carmichael
  CHECK_FALSE(is_prime(3215031751ULL));  // strong pseudoprime to bases 2,3,5,7
  CHECK(is_prime(2147483647ULL));     // 2^31 - 1
  CHECK(is_prime(2305843009213693951ULL));  // 2^61 - 1
  CHECK_FALSE(is_prime(2305843009213693953ULL));
  for (uint64_t v = 2; v < 2000; ++v) {
    bool slow = true;
    for (uint64_t d = 2; d * d <= v; ++d) {
      if (v % d == 0) {
        slow = false;
        break;
      }
    }
    CHECK(is_prime(v) == slow);
  }
}

TEST_CASE("next_prime") {
  CHECK(next_prime(0) == 2);
  CHECK(next_prime(2) == 3);
  CHECK(next_prime(13) == 17);
  CHECK(next_prime(14) == 17);
}
