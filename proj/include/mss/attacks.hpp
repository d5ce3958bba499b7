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

#ifndef MSS_ATTACKS_HPP_
#define MSS_ATTACKS_HPP_

#include <cstdint>
#include <limits>
#include <vector>

#include "mss/core.hpp"
#include "mss/mechanisms.hpp"
#include "mss/rng.hpp"

namespace mss {

// Single-message Bayesian reconstruction success rates.
struct DraEstimate {
  double analytic = std::numeric_limits<double>::quiet_NaN();
  double empirical = 0.0;
  uint64_t samples = 0;
  double stderr_ = 0.0;  // binomial standard error sqrt(r(1-r)/samples)
};

// Number of domain values mapping to each residue class mod m:
// with k = e*m + r, class z holds e+1 values for z < r, else e.
std::vector<uint64_t> residue_multiplicity(uint64_t k, uint32_t m);

// Closed forms (Bayes-optimal single-message attacker, uniform prior).
double dra_grr(uint64_t k, double eps);
double dra_ss(uint64_t k, double eps);
// Symmetric-RAPPOR closed form, evaluated in log-space.
double dra_rappor_symmetric(uint64_t k, double eps);

// (1/l) sum_j p_j / (omega_j ceil(k/m_j)); tight when every m_j divides k.
double dra_mss_upper(const ModuliSet& ms);

// Exact expected attacker success: (1/l) sum_j p_j sum_z (n_z/k) E[1/(n_z + T)],
// where T is the filler weight. The filler expectation is evaluated exactly:
// the count of heavy classes among the fillers is hypergeometric.
double dra_mss_exact(const ModuliSet& ms);

// Full projective-domain PGR closed form: e^eps / (K + (e^eps - 1) c_set),
// K = (q^t - 1)/(q - 1), c_set = (q^{t-1} - 1)/(q - 1).
double dra_pgr_full(uint64_t q, uint32_t t, double eps);

// Single-report attacker guesses (uniform prior). The SS/OUE/MSS attackers
// draw uniformly over the posterior support; OUE and MSS fall back to a
// uniform guess over [k] when the support is empty.
uint32_t attack_guess_ss(const std::vector<uint32_t>& subset, Rng& rng);
uint32_t attack_guess_oue(const std::vector<uint8_t>& bits, uint64_t k, Rng& rng);
uint32_t attack_guess_mss(const MssReport& report, const ModuliSet& ms, Rng& rng);

// Simulates the per-mechanism Bayes attacker on freshly perturbed reports of
// `data`, over `trials` passes; reuses one report per (trial, user).
DraEstimate empirical_dra(const MechanismKind& kind, const Dataset& data, uint32_t trials,
                          uint64_t seed);

}  // namespace mss

#endif  // MSS_ATTACKS_HPP_
