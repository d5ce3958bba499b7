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

#ifndef MSS_DECODER_HPP_
#define MSS_DECODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mss/core.hpp"
#include "mss/mechanisms.hpp"
#include "mss/sparse.hpp"

namespace mss {

// Per-block residue membership counts. Each report contributes omega_j
// increments to block j's count vector and one user to n_j.
struct BlockCounts {
  std::vector<std::vector<uint64_t>> counts;  // counts[j][a], length m_j
  std::vector<uint64_t> block_users;          // n_j
  uint64_t total_users = 0;
};

// Stacked residue-indicator design. Row (j, r) marks {x : x mod m_j = r};
// rows of block j are scaled by sqrt(w_j) once weights are applied.
struct WeightedDesign {
  SparseMatrix a;  // T x k
  ModuliSet moduli;
  std::vector<int64_t> block_row_start;  // ell + 1
  std::vector<double> sqrt_w;            // per block; 1.0 while unweighted
  bool weighted = false;

  int64_t block_of_row(int64_t row) const;
};

WeightedDesign build_design(const ModuliSet& ms);

// Scales block rows by sqrt(w_j), w_j = n_j (p_j - q_j)^2 / (pi_j (1 - pi_j))
// with the prior-free marginal pi_j. Blocks with n_j = 0 get weight zero and
// drop out of the solve; throws std::invalid_argument if every n_j is zero.
void apply_weights(WeightedDesign& d, std::span<const uint64_t> block_users);
void apply_weights(WeightedDesign& d, std::span<const double> block_users);

BlockCounts aggregate(std::span<const MssReport> reports, const ModuliSet& ms);
// Serial reference with identical results (integer accumulation).
BlockCounts aggregate_serial(std::span<const MssReport> reports, const ModuliSet& ms);

// Debiased observation vector: per block, s_{j,a} = (c_j[a]/n_j - q_j)/(p_j - q_j).
// Blocks with n_j = 0 contribute zeros (their rows carry weight zero).
std::vector<double> debias(const BlockCounts& bc, const ModuliSet& ms);

struct DecodeResult {
  Histogram estimate;
  SolverReport solver;
};

// f_hat = argmin ||A_w z - sqrt(w) .* s||^2 + lambda ||z||^2 via LSMR.
DecodeResult estimate(const WeightedDesign& d, std::span<const double> s, double lambda,
                      const LsmrOptions& opt = {});

// Analytic covariance of the stacked debiased observations at histogram f:
// block-diagonal (diag(pi_j) - pi_j pi_j^T) / (n_j (p_j - q_j)^2) with
// plug-in n_j = n/ell, minus the cross-block rank-one term (ell/n^2) u u^T.
struct AnalyticModel {
  std::vector<std::vector<double>> pi;  // pi_{j,a} = q_j + (p_j - q_j) g_{j,a}
  std::vector<double> eta;              // n_j (p_j - q_j)^2
  std::vector<double> u;                // stacked pi_j / (p_j - q_j)
  uint64_t n = 0;
  uint32_t ell = 0;

  uint64_t dim() const;
  void apply(std::span<const double> v, std::span<double> out) const;  // Sigma v
  double quad_form(std::span<const double> v) const;                   // v^T Sigma v
  std::vector<double> diagonal() const;
  std::vector<std::vector<double>> dense() const;  // small T only
};

AnalyticModel analytic_covariance(const Histogram& f, const ModuliSet& ms, uint64_t n);

// Estimator knobs for analytic_mse; the defaults implement the documented
// contract (exact per-row solves for T <= 2000, else seeded Hutchinson
// probing with at least 256 probes and a 2% standard-error target).
struct MseEstimatorOptions {
  int64_t exact_threshold = 2000;
  int min_probes = 256;
  int max_probes = 2048;
  double se_target = 0.02;
  double cg_tol = 1e-12;
};

// (1/k) Tr(G Sigma(f) G^T) with G = (A_w^T A_w + lambda I)^{-1} A^T W.
double analytic_mse(const Histogram& f, const ModuliSet& ms, uint64_t n, double lambda,
                    uint64_t probe_seed = 0x9A7EC5, const MseEstimatorOptions& opts = {});

// 4 kappa e^eps / (n (e^eps - 1)^2).
double worst_case_mse_bound(double kappa, double eps, uint64_t n);

// ceil(log2 C(n, r)) with exact big-integer arithmetic.
uint64_t ceil_log2_binomial(uint64_t n, uint64_t r);

// ceil(log2 l) + (1/l) sum_j ceil(log2 C(m_j, omega_j)).
double comm_cost_bits(const ModuliSet& ms);

// GRR: ceil(log2 k); SS: ceil(log2 C(k, omega)); OUE: k.
double baseline_bits(Mechanism mech, uint64_t k, double eps);

}  // namespace mss

#endif  // MSS_DECODER_HPP_
