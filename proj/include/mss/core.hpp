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

#ifndef MSS_CORE_HPP_
#define MSS_CORE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace mss {

// A length-k frequency vector. True distributions are nonnegative and sum
// to one; raw unbiased estimates may carry negative entries and are not
// projected unless clamp_renormalize is applied explicitly.
struct Histogram {
  std::vector<double> f;

  Histogram() = default;
  explicit Histogram(std::vector<double> values) : f(std::move(values)) {}

  uint64_t k() const { return f.size(); }
  double sum() const;
};

// Throws std::invalid_argument unless f is a proper distribution
// (entries >= 0, sum within 1e-12 of 1).
void check_distribution(const Histogram& h);

// Post-processing: clamp negatives to zero and renormalize. Off by default
// everywhere; provided as an opt-in convenience.
Histogram clamp_renormalize(const Histogram& h);

struct Dataset {
  uint64_t k = 0;
  std::vector<uint32_t> values;  // each in [0, k)
};

void check_dataset(const Dataset& d);

// SubsetSelection parameters for a single block of size m at privacy eps:
//   omega = clamp(round(m / (e^eps + 1)), 1, m - 1)
//   p     = omega e^eps / (omega e^eps + m - omega)
//   q     = [omega e^eps (omega-1) + (m-omega) omega] / [(m-1)(omega e^eps + m - omega)]
//   pi    = q + (p - q)/m
struct SSBlockParams {
  uint32_t m = 0;
  uint32_t omega = 0;
  double eps = 0.0;
  double p = 0.0;
  double q = 0.0;
  double pi = 0.0;
};

SSBlockParams ss_params(uint32_t m, double eps);

enum class ModuliCheck {
  kOk,
  kCoprimalityFailure,  // some pair shares a factor
  kCoverageFailure,     // product of moduli < k
  kRankFailure,         // sum(m_j - 1) < k
};

const char* to_string(ModuliCheck c);

// Checks pairwise coprimality, CRT coverage (prod m_j >= k) and the rank
// condition (sum(m_j - 1) >= k), in that order. Throws std::invalid_argument
// for an empty list or any m < 2.
ModuliCheck validate_moduli(const std::vector<uint32_t>& moduli, uint64_t k);

// Pairwise-coprime moduli with per-block SubsetSelection parameters.
struct ModuliSet {
  std::vector<uint32_t> moduli;
  uint64_t k = 0;
  double eps = 0.0;
  std::vector<SSBlockParams> blocks;

  uint32_t ell() const { return static_cast<uint32_t>(moduli.size()); }
  uint64_t total_rows() const;  // sum of m_j
};

// Builds a ModuliSet. Requires pairwise coprimality and CRT coverage; the
// rank condition is a decoding concern left to validate_moduli and the
// moduli search (user-side mechanisms are well-defined without it).
ModuliSet make_moduli_set(std::vector<uint32_t> moduli, uint64_t k, double eps);

// Residue vector (x mod m_0, ..., x mod m_{l-1}). Requires 0 <= x < k.
std::vector<uint32_t> rns_encode(uint64_t x, const ModuliSet& ms);

// A user's report: block index and a sorted residue subset of size omega_j.
struct MssReport {
  uint32_t block = 0;
  std::vector<uint32_t> subset;
};

}  // namespace mss

#endif  // MSS_CORE_HPP_
