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

#include <cmath>
#include <stdexcept>

namespace mss {

namespace {

uint64_t isqrt_u64(uint64_t n) {
  auto r = static_cast<uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>(static_cast<__uint128_t>(a) * b % m);
}

uint64_t powmod(uint64_t a, uint64_t e, uint64_t m) {
  uint64_t r = 1;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

std::vector<uint64_t> simple_sieve(uint64_t limit) {
  std::vector<uint64_t> primes;
  if (limit < 2) return primes;
  std::vector<char> composite(limit + 1, 0);
  for (uint64_t i = 2; i * i <= limit; ++i) {
    if (composite[i]) continue;
    for (uint64_t j = i * i; j <= limit; j += i) composite[j] = 1;
  }
  for (uint64_t i = 2; i <= limit; ++i) {
    if (!composite[i]) primes.push_back(i);
  }
  return primes;
}

bool is_prime(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This witness set is exact for every n < 3.3e24, hence for all u64.
  for (uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

uint64_t next_prime(uint64_t n) {
  uint64_t c = n + 1;
  if (c <= 2) return 2;
  if ((c & 1) == 0) ++c;
  while (!is_prime(c)) c += 2;
  return c;
}

std::vector<uint64_t> primes_in_band(double lo, double hi) {
  if (!(hi >= 2.0)) throw std::invalid_argument("primes_in_band: hi must be >= 2");
  const double lo_clamped = std::max(2.0, std::ceil(lo));
  const double hi_floor = std::floor(hi);
  std::vector<uint64_t> primes;
  if (lo_clamped > hi_floor) return primes;
  const auto low = static_cast<uint64_t>(lo_clamped);
  const auto high = static_cast<uint64_t>(hi_floor);

  if (high > 100'000'000ULL) {
    for (uint64_t c = low; c <= high; ++c) {
      if (is_prime(c)) primes.push_back(c);
    }
    return primes;
  }

  // Segmented sieve over [low, high] with base primes up to sqrt(high).
  const std::vector<uint64_t> base = simple_sieve(isqrt_u64(high));
  std::vector<char> composite(high - low + 1, 0);
  for (uint64_t p : base) {
    uint64_t start = std::max(p * p, (low + p - 1) / p * p);
    for (uint64_t j = start; j <= high; j += p) composite[j - low] = 1;
  }
  for (uint64_t v = low; v <= high; ++v) {
    if (!composite[v - low]) primes.push_back(v);
  }
  return primes;
}

}  // namespace mss
