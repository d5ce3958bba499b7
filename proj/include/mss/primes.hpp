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

#ifndef MSS_PRIMES_HPP_
#define MSS_PRIMES_HPP_

#include <cstdint>
#include <vector>

namespace mss {

// All primes <= limit, ascending (simple sieve of Eratosthenes).
std::vector<uint64_t> simple_sieve(uint64_t limit);

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(uint64_t n);

// Smallest prime strictly greater than n.
uint64_t next_prime(uint64_t n);

// All primes p with max(2, ceil(lo)) <= p <= floor(hi), ascending.
// Uses a segmented sieve; beyond 1e8 the band is scanned with
// deterministic Miller-Rabin instead. Requires hi >= 2; an empty band
// yields an empty list.
std::vector<uint64_t> primes_in_band(double lo, double hi);

}  // namespace mss

#endif  // MSS_PRIMES_HPP_
