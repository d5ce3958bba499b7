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

#ifndef MSS_MECHANISMS_HPP_
#define MSS_MECHANISMS_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mss/core.hpp"
#include "mss/rng.hpp"

namespace mss {

enum class Mechanism { kGrr, kSs, kOue, kMss };

const char* to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& name);

// A mechanism plus its parameters; MSS additionally carries the moduli.
struct MechanismKind {
  Mechanism mech = Mechanism::kGrr;
  uint64_t k = 0;
  double eps = 0.0;
  std::optional<ModuliSet> moduli;  // required for kMss

  static MechanismKind grr(uint64_t k, double eps) { return {Mechanism::kGrr, k, eps, {}}; }
  static MechanismKind ss(uint64_t k, double eps) { return {Mechanism::kSs, k, eps, {}}; }
  static MechanismKind oue(uint64_t k, double eps) { return {Mechanism::kOue, k, eps, {}}; }
  static MechanismKind mss(ModuliSet ms);
};

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- user-side randomizers ---

// Reports x with probability e^eps/(e^eps + k - 1), else a uniform other symbol.
uint32_t grr_perturb(uint32_t x, uint64_t k, double eps, Rng& rng);

// SubsetSelection kernel over [m]: with probability p the subset contains the
// true residue plus omega-1 uniform fillers, otherwise omega uniform others.
// Returned subset is sorted and has exactly omega elements.
std::vector<uint32_t> ss_perturb_block(uint32_t r, const SSBlockParams& bp, Rng& rng);

std::vector<uint32_t> ss_perturb(uint32_t x, uint64_t k, double eps, Rng& rng);

// Samples a uniform block index and perturbs the residue with the SS kernel.
MssReport mss_perturb(uint32_t x, const ModuliSet& ms, Rng& rng);

// bit_x = 1 w.p. 1/2; every other bit independently w.p. 1/(e^eps + 1).
std::vector<uint8_t> oue_perturb(uint32_t x, uint64_t k, double eps, Rng& rng);

// --- single-mechanism estimators (debiased, unbiased, not projected) ---

Histogram grr_estimate(const std::vector<uint64_t>& counts, double eps, uint64_t n);
Histogram ss_estimate(const std::vector<uint64_t>& member_counts, double eps, uint64_t n);
Histogram oue_estimate(const std::vector<uint64_t>& bit_sums, double eps, uint64_t n);

// --- exact output distributions on enumerable spaces ---
//
// Reports are enumerated in a fixed order (symbols, lexicographic subsets,
// bit masks, or blocks-then-subsets for MSS); pmf(x) returns the exact
// probability of every report for input x. Capacity limits: k <= 12 for
// SS/OUE, sum_j C(m_j, omega_j) <= 1e6 for MSS, any k for GRR.
class ReportSpace {
 public:
  explicit ReportSpace(const MechanismKind& kind);

  uint64_t size() const { return size_; }
  std::vector<double> pmf(uint32_t x) const;

 private:
  MechanismKind kind_;
  uint64_t size_ = 0;
  // Enumerated subsets per block (MSS) or for the single SS space.
  std::vector<std::vector<std::vector<uint32_t>>> subsets_;
};

}  // namespace mss

#endif  // MSS_MECHANISMS_HPP_
