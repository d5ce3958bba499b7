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

#ifndef MSS_MODULI_HPP_
#define MSS_MODULI_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mss/core.hpp"

namespace mss {

struct ModuliSearchConfig {
  double kappa_max = 10.0;
  uint32_t ell_max = 20;
  double beta = 20.0;
  uint32_t trials = 1000;
  uint64_t seed = 0;
  uint64_t reference_n = 10000;  // plug-in n for the MSE ranking

  void check() const;
};

struct SearchExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndefinedBoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// T* = ceil(ln k / ln(k/(beta*ell))); requires k/(beta*ell) > 1.
uint64_t t_star(uint64_t k, double beta, uint32_t ell);

// alpha <= (beta + e^eps) / (1/beta + e^eps).
double alpha_bound(double beta, double eps);

// alpha (ell + T*)/(ell - T*); +infinity when ell <= T*.
double kappa_bound(uint32_t ell, uint64_t t_star_value, double alpha);

// Spectral condition number of the weighted design with planning weights
// n_j = 1 (kappa is invariant to the common n/ell factor).
double measure_design_kappa(const ModuliSet& ms);

// Deterministic fallback: first ell primes >= ceil(k^(1/ell)), bumped
// round-robin (left to right) until coverage and rank hold.
std::vector<uint32_t> fallback_moduli(uint64_t k, uint32_t ell);

// Prime-band sampling with repair; accepts the first tuple whose measured
// kappa is within cfg.kappa_max, else tries the deterministic fallback.
// Returns nullopt when the band holds fewer than ell primes or nothing
// acceptable is found.
std::optional<ModuliSet> find_valid_moduli(uint64_t k, uint32_t ell, const ModuliSearchConfig& cfg,
                                           double eps, double* kappa_out = nullptr);

struct CandidateLog {
  std::vector<uint32_t> moduli;
  uint32_t ell = 0;
  double kappa = 0.0;
  double analytic_mse = 0.0;
};

struct ChooseResult {
  ModuliSet set;
  double kappa = 0.0;
  double analytic_mse = 0.0;
  std::vector<CandidateLog> candidates;  // every candidate examined
};

// Outer search: sweeps ell = 2..ell_max, ranks candidates by analytic MSE
// at the uniform histogram with planning counts n_j = n/ell. Throws
// SearchExhaustedError when no ell yields a candidate. Domains k <= 3
// degenerate to a single modulus (MSS reduces to SS).
ChooseResult choose_moduli(uint64_t k, double eps, const ModuliSearchConfig& cfg = {});

// --- JSON sidecar cache, keyed by (k, eps, cfg hash) ---

struct ModuliCacheEntry {
  std::vector<uint32_t> moduli;
  double kappa = 0.0;
  double analytic_mse = 0.0;
};

uint64_t search_config_hash(const ModuliSearchConfig& cfg);
std::optional<ModuliCacheEntry> moduli_cache_lookup(const std::string& path, uint64_t k,
                                                    double eps, const ModuliSearchConfig& cfg);
void moduli_cache_store(const std::string& path, uint64_t k, double eps,
                        const ModuliSearchConfig& cfg, const ModuliCacheEntry& entry);

// Cache-aware wrapper around choose_moduli; empty path disables caching.
ChooseResult choose_moduli_cached(uint64_t k, double eps, const ModuliSearchConfig& cfg,
                                  const std::string& cache_path);

}  // namespace mss

#endif  // MSS_MODULI_HPP_
