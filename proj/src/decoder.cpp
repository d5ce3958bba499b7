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

#include "mss/decoder.hpp"

#include <gmp.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mss/rng.hpp"

namespace mss {

int64_t WeightedDesign::block_of_row(int64_t row) const {
  const auto it = std::upper_bound(block_row_start.begin(), block_row_start.end(), row);
  return static_cast<int64_t>(it - block_row_start.begin()) - 1;
}

WeightedDesign build_design(const ModuliSet& ms) {
  WeightedDesign d;
  d.moduli = ms;
  const uint64_t t_rows = ms.total_rows();
  const uint64_t k = ms.k;

  d.block_row_start.assign(ms.ell() + 1, 0);
  for (uint32_t j = 0; j < ms.ell(); ++j) {
    d.block_row_start[j + 1] = d.block_row_start[j] + ms.moduli[j];
  }

  // Row (j, r) holds a 1 in every column x with x mod m_j = r. Built in CSR
  // order directly; each column carries exactly one entry per block.
  SparseMatrix a;
  a.rows = static_cast<int64_t>(t_rows);
  a.cols = static_cast<int64_t>(k);
  a.row_ptr.assign(t_rows + 1, 0);
  for (uint32_t j = 0; j < ms.ell(); ++j) {
    const uint32_t m = ms.moduli[j];
    for (uint32_t r = 0; r < m; ++r) {
      const uint64_t members = r < k ? (k - 1 - r) / m + 1 : 0;
      a.row_ptr[d.block_row_start[j] + r + 1] = static_cast<int64_t>(members);
    }
  }
  for (uint64_t i = 0; i < t_rows; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
  a.col_idx.resize(a.row_ptr.back());
  a.val.assign(a.row_ptr.back(), 1.0);
  for (uint32_t j = 0; j < ms.ell(); ++j) {
    const uint32_t m = ms.moduli[j];
    for (uint32_t r = 0; r < m && r < k; ++r) {
      int64_t t = a.row_ptr[d.block_row_start[j] + r];
      for (uint64_t x = r; x < k; x += m) a.col_idx[t++] = static_cast<int32_t>(x);
    }
  }
  a.finalize();
  d.a = std::move(a);
  d.sqrt_w.assign(ms.ell(), 1.0);
  return d;
}

namespace {

void apply_weights_impl(WeightedDesign& d, std::span<const double> block_users) {
  if (block_users.size() != d.moduli.ell()) {
    throw std::invalid_argument("apply_weights: block count mismatch");
  }
  double total = 0.0;
  for (double nj : block_users) total += nj;
  if (!(total > 0.0)) throw std::invalid_argument("apply_weights: no data in any block");

  // Entries of the unweighted design are exactly 1, so block values are set
  // to sqrt(w_j) outright; re-weighting an already weighted design is fine.
  std::vector<double> row_weight(d.a.rows, 0.0);
  for (uint32_t j = 0; j < d.moduli.ell(); ++j) {
    const auto& bp = d.moduli.blocks[j];
    const double nj = block_users[j];
    const double w = nj > 0.0 ? (bp.p - bp.q) / std::sqrt(bp.pi * (1.0 - bp.pi) / nj) : 0.0;
    for (int64_t row = d.block_row_start[j]; row < d.block_row_start[j + 1]; ++row) {
      row_weight[row] = w;
      for (int64_t t = d.a.row_ptr[row]; t < d.a.row_ptr[row + 1]; ++t) d.a.val[t] = w;
    }
    d.sqrt_w[j] = w;
  }
  // Keep the transposed copy in sync.
  for (size_t t = 0; t < d.a.val_t.size(); ++t) d.a.val_t[t] = row_weight[d.a.row_idx[t]];
  d.weighted = true;
}

}  // namespace

void apply_weights(WeightedDesign& d, std::span<const uint64_t> block_users) {
  std::vector<double> nj(block_users.begin(), block_users.end());
  apply_weights_impl(d, nj);
}

void apply_weights(WeightedDesign& d, std::span<const double> block_users) {
  apply_weights_impl(d, block_users);
}

BlockCounts aggregate_serial(std::span<const MssReport> reports, const ModuliSet& ms) {
  BlockCounts bc;
  bc.counts.resize(ms.ell());
  for (uint32_t j = 0; j < ms.ell(); ++j) bc.counts[j].assign(ms.moduli[j], 0);
  bc.block_users.assign(ms.ell(), 0);
  for (const auto& rep : reports) {
    if (rep.block >= ms.ell()) throw std::invalid_argument("aggregate: bad block index");
    if (rep.subset.size() != ms.blocks[rep.block].omega) {
      throw std::invalid_argument("aggregate: malformed report (wrong subset size)");
    }
    ++bc.block_users[rep.block];
    auto& c = bc.counts[rep.block];
    for (uint32_t a : rep.subset) {
      if (a >= ms.moduli[rep.block]) throw std::invalid_argument("aggregate: residue out of range");
      ++c[a];
    }
  }
  bc.total_users = reports.size();
  return bc;
}

BlockCounts aggregate(std::span<const MssReport> reports, const ModuliSet& ms) {
  const int threads = omp_get_max_threads();
  if (threads <= 1 || reports.size() < 4096) return aggregate_serial(reports, ms);

  std::vector<BlockCounts> shards(threads);
  bool bad_report = false;
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    BlockCounts local;
    local.counts.resize(ms.ell());
    for (uint32_t j = 0; j < ms.ell(); ++j) local.counts[j].assign(ms.moduli[j], 0);
    local.block_users.assign(ms.ell(), 0);
#pragma omp for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(reports.size()); ++i) {
      const auto& rep = reports[i];
      if (rep.block >= ms.ell() || rep.subset.size() != ms.blocks[rep.block].omega) {
#pragma omp atomic write
        bad_report = true;
        continue;
      }
      ++local.block_users[rep.block];
      auto& c = local.counts[rep.block];
      for (uint32_t a : rep.subset) {
        if (a >= ms.moduli[rep.block]) {
#pragma omp atomic write
          bad_report = true;
        } else {
          ++c[a];
        }
      }
    }
    shards[tid] = std::move(local);
  }
  if (bad_report) throw std::invalid_argument("aggregate: malformed report");

  // Integer merge; order-independent.
  BlockCounts bc = std::move(shards[0]);
  for (int t = 1; t < threads; ++t) {
    for (uint32_t j = 0; j < ms.ell(); ++j) {
      bc.block_users[j] += shards[t].block_users[j];
      for (size_t a = 0; a < bc.counts[j].size(); ++a) bc.counts[j][a] += shards[t].counts[j][a];
    }
  }
  bc.total_users = reports.size();
  return bc;
}

std::vector<double> debias(const BlockCounts& bc, const ModuliSet& ms) {
  if (bc.counts.size() != ms.ell()) throw std::invalid_argument("debias: block count mismatch");
  uint64_t users = 0;
  for (uint64_t nj : bc.block_users) users += nj;
  if (users == 0) throw std::invalid_argument("debias: no data in any block");

  std::vector<double> s;
  s.reserve(ms.total_rows());
  for (uint32_t j = 0; j < ms.ell(); ++j) {
    const auto& bp = ms.blocks[j];
    const uint64_t nj = bc.block_users[j];
    for (uint32_t a = 0; a < ms.moduli[j]; ++a) {
      if (nj == 0) {
        s.push_back(0.0);
      } else {
        const double ybar = static_cast<double>(bc.counts[j][a]) / static_cast<double>(nj);
        s.push_back((ybar - bp.q) / (bp.p - bp.q));
      }
    }
  }
  return s;
}

DecodeResult estimate(const WeightedDesign& d, std::span<const double> s, double lambda,
                      const LsmrOptions& opt) {
  if (static_cast<int64_t>(s.size()) != d.a.rows) {
    throw std::invalid_argument("estimate: observation length mismatch");
  }
  if (lambda < 0.0) throw std::invalid_argument("estimate: lambda must be >= 0");
  std::vector<double> b(s.size());
  for (uint32_t j = 0; j < d.moduli.ell(); ++j) {
    for (int64_t row = d.block_row_start[j]; row < d.block_row_start[j + 1]; ++row) {
      b[row] = d.sqrt_w[j] * s[row];
    }
  }
  LsmrOptions o = opt;
  o.damp = std::sqrt(lambda);
  SolverReport rep = lsmr(d.a, b, o);
  DecodeResult res;
  res.estimate.f = std::move(rep.x);
  rep.x.clear();
  res.solver = std::move(rep);
  return res;
}

uint64_t AnalyticModel::dim() const {
  uint64_t t = 0;
  for (const auto& block : pi) t += block.size();
  return t;
}

void AnalyticModel::apply(std::span<const double> v, std::span<double> out) const {
  if (v.size() != dim() || out.size() != v.size()) {
    throw std::invalid_argument("analytic covariance: dimension mismatch");
  }
  size_t off = 0;
  for (size_t j = 0; j < pi.size(); ++j) {
    const auto& pj = pi[j];
    double pv = 0.0;
    for (size_t a = 0; a < pj.size(); ++a) pv += pj[a] * v[off + a];
    for (size_t a = 0; a < pj.size(); ++a) {
      out[off + a] = (pj[a] * v[off + a] - pj[a] * pv) / eta[j];
    }
    off += pj.size();
  }
  double uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) uv += u[i] * v[i];
  const double scale = static_cast<double>(ell) / (static_cast<double>(n) * static_cast<double>(n));
  for (size_t i = 0; i < u.size(); ++i) out[i] -= scale * uv * u[i];
}

double AnalyticModel::quad_form(std::span<const double> v) const {
  if (v.size() != dim()) throw std::invalid_argument("analytic covariance: dimension mismatch");
  double total = 0.0;
  size_t off = 0;
  for (size_t j = 0; j < pi.size(); ++j) {
    const auto& pj = pi[j];
    double pv = 0.0, dv = 0.0;
    for (size_t a = 0; a < pj.size(); ++a) {
      pv += pj[a] * v[off + a];
      dv += pj[a] * v[off + a] * v[off + a];
    }
    total += (dv - pv * pv) / eta[j];
    off += pj.size();
  }
  double uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) uv += u[i] * v[i];
  total -= static_cast<double>(ell) / (static_cast<double>(n) * static_cast<double>(n)) * uv * uv;
  return total;
}

std::vector<double> AnalyticModel::diagonal() const {
  std::vector<double> diag;
  diag.reserve(dim());
  const double scale = static_cast<double>(ell) / (static_cast<double>(n) * static_cast<double>(n));
  size_t i = 0;
  for (size_t j = 0; j < pi.size(); ++j) {
    for (double pa : pi[j]) {
      diag.push_back((pa - pa * pa) / eta[j] - scale * u[i] * u[i]);
      ++i;
    }
  }
  return diag;
}

std::vector<std::vector<double>> AnalyticModel::dense() const {
  const uint64_t t = dim();
  if (t > 4096) throw std::invalid_argument("analytic covariance: too large to densify");
  std::vector<std::vector<double>> sig(t, std::vector<double>(t, 0.0));
  std::vector<double> e(t, 0.0), col(t, 0.0);
  for (uint64_t i = 0; i < t; ++i) {
    e[i] = 1.0;
    apply(e, col);
    for (uint64_t r = 0; r < t; ++r) sig[r][i] = col[r];
    e[i] = 0.0;
  }
  return sig;
}

AnalyticModel analytic_covariance(const Histogram& f, const ModuliSet& ms, uint64_t n) {
  if (f.k() != ms.k) throw std::invalid_argument("analytic_covariance: histogram size mismatch");
  if (n == 0) throw std::invalid_argument("analytic_covariance: n must be positive");
  AnalyticModel model;
  model.n = n;
  model.ell = ms.ell();
  const double nj = static_cast<double>(n) / static_cast<double>(ms.ell());
  model.pi.resize(ms.ell());
  model.eta.resize(ms.ell());
  for (uint32_t j = 0; j < ms.ell(); ++j) {
    const auto& bp = ms.blocks[j];
    std::vector<double> g(ms.moduli[j], 0.0);
    for (uint64_t x = 0; x < ms.k; ++x) g[x % ms.moduli[j]] += f.f[x];
    auto& pj = model.pi[j];
    pj.resize(ms.moduli[j]);
    for (uint32_t a = 0; a < ms.moduli[j]; ++a) pj[a] = bp.q + (bp.p - bp.q) * g[a];
    model.eta[j] = nj * (bp.p - bp.q) * (bp.p - bp.q);
    for (uint32_t a = 0; a < ms.moduli[j]; ++a) model.u.push_back(pj[a] / (bp.p - bp.q));
  }
  return model;
}

namespace {

// One column of G applied to a unit observation: G e_i = M_lambda^{-1} A^T W e_i.
// rhs building and the CG solve are factored out so both the exact path and
// the Hutchinson path share them.
struct GainOperator {
  const WeightedDesign& d;
  double lambda;
  int64_t cg_cap;
  double cg_tol = 1e-12;

  // Solves (A_w^T A_w + lambda I) z = rhs.
  void solve(std::span<const double> rhs, std::vector<double>& z, const char* what) const {
    if (!normal_cg(d.a, rhs, lambda, cg_tol, cg_cap, z)) {
      throw std::runtime_error(std::string("analytic_mse: normal-equation solve failed (") +
                               what + "); design may be rank-deficient with lambda=0");
    }
  }
};

}  // namespace

double analytic_mse(const Histogram& f, const ModuliSet& ms, uint64_t n, double lambda,
                    uint64_t probe_seed, const MseEstimatorOptions& opts) {
  if (lambda == 0.0) {
    // Full column rank needs sum(m_j - 1) >= k, except for the single
    // identity-like block (m >= k).
    uint64_t rank_sum = 0;
    for (uint32_t m : ms.moduli) rank_sum += m - 1;
    const bool single_identity = ms.ell() == 1 && ms.moduli[0] >= ms.k;
    if (rank_sum < ms.k && !single_identity) {
      throw std::runtime_error("analytic_mse: rank-deficient design with lambda=0");
    }
  }
  const AnalyticModel sigma = analytic_covariance(f, ms, n);
  WeightedDesign d = build_design(ms);
  const double nj = static_cast<double>(n) / static_cast<double>(ms.ell());
  std::vector<double> planning(ms.ell(), nj);
  apply_weights(d, std::span<const double>(planning));

  const int64_t t_rows = d.a.rows;
  const int64_t k = d.a.cols;
  GainOperator gain{d, lambda, std::max<int64_t>(6 * k + 200, 2000)};
  gain.cg_tol = opts.cg_tol;

  if (t_rows <= opts.exact_threshold) {
    // Exact: Tr(G Sigma G^T) expanded over Sigma's structure. The diagonal
    // part needs ||G e_i||^2 per row; the rank-one parts need one solve per
    // block plus one for the global cross term.
    const int64_t ell = ms.ell();
    std::vector<double> trace_terms(t_rows, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (int64_t row = 0; row < t_rows; ++row) {
      const int64_t j = d.block_of_row(row);
      const double wj = d.sqrt_w[j] * d.sqrt_w[j];
      if (wj == 0.0) continue;
      // A^T W e_row = w_j * indicator of row's residue class.
      std::vector<double> rhs(k, 0.0);
      for (int64_t t = d.a.row_ptr[row]; t < d.a.row_ptr[row + 1]; ++t) {
        rhs[d.a.col_idx[t]] = wj;
      }
      std::vector<double> z;
      gain.solve(rhs, z, "row column");
      double nrm2 = 0.0;
      for (double v : z) nrm2 += v * v;
      const size_t a = static_cast<size_t>(row - d.block_row_start[j]);
      trace_terms[row] = sigma.pi[j][a] / sigma.eta[j] * nrm2;
    }
    double total = 0.0;
    for (double v : trace_terms) total += v;

    // Per-block rank-one deflation: (1/eta_j) ||G pi_j||^2.
    for (int64_t j = 0; j < ell; ++j) {
      const double wj = d.sqrt_w[j] * d.sqrt_w[j];
      if (wj == 0.0) continue;
      std::vector<double> rhs(k, 0.0);
      for (size_t a = 0; a < sigma.pi[j].size(); ++a) {
        const int64_t row = d.block_row_start[j] + static_cast<int64_t>(a);
        for (int64_t t = d.a.row_ptr[row]; t < d.a.row_ptr[row + 1]; ++t) {
          rhs[d.a.col_idx[t]] += wj * sigma.pi[j][a];
        }
      }
      std::vector<double> z;
      gain.solve(rhs, z, "block rank-one");
      double nrm2 = 0.0;
      for (double v : z) nrm2 += v * v;
      total -= nrm2 / sigma.eta[j];
    }

    // Global rank-one cross term: (ell/n^2) ||G u||^2.
    {
      std::vector<double> rhs(k, 0.0);
      size_t i = 0;
      for (int64_t j = 0; j < ell; ++j) {
        const double wj = d.sqrt_w[j] * d.sqrt_w[j];
        for (size_t a = 0; a < sigma.pi[j].size(); ++a, ++i) {
          if (wj == 0.0) continue;
          const int64_t row = d.block_row_start[j] + static_cast<int64_t>(a);
          for (int64_t t = d.a.row_ptr[row]; t < d.a.row_ptr[row + 1]; ++t) {
            rhs[d.a.col_idx[t]] += wj * sigma.u[i];
          }
        }
      }
      std::vector<double> z;
      gain.solve(rhs, z, "global rank-one");
      double nrm2 = 0.0;
      for (double v : z) nrm2 += v * v;
      total -= static_cast<double>(ms.ell()) /
               (static_cast<double>(n) * static_cast<double>(n)) * nrm2;
    }
    return total / static_cast<double>(k);
  }

  // Hutchinson: Tr(G Sigma G^T) = E_z [ (G^T z)^T Sigma (G^T z) ], z in {+-1}^k.
  const int kMinProbes = opts.min_probes;
  const int kMaxProbes = opts.max_probes;
  std::vector<double> samples;
  samples.reserve(kMinProbes);
  double mean = 0.0;
  int probes = 0;
  while (probes < kMaxProbes) {
    const int batch = probes == 0 ? kMinProbes : 128;
    const int base = probes;
    samples.resize(base + batch);
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < batch; ++b) {
      Rng rng = Rng::derive(probe_seed, {0xB0BACAFEULL, static_cast<uint64_t>(base + b)});
      std::vector<double> z(k);
      for (auto& v : z) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
      std::vector<double> minv;
      gain.solve(z, minv, "probe");
      std::vector<double> y(t_rows, 0.0);
      matvec(d.a, minv, y);  // W^{1/2} A t
      for (int64_t row = 0; row < t_rows; ++row) {
        y[row] *= d.sqrt_w[d.block_of_row(row)];  // -> W A t
      }
      samples[base + b] = sigma.quad_form(y);
    }
    probes += batch;
    mean = 0.0;
    for (int i = 0; i < probes; ++i) mean += samples[i];
    mean /= probes;
    double var = 0.0;
    for (int i = 0; i < probes; ++i) var += (samples[i] - mean) * (samples[i] - mean);
    var /= std::max(1, probes - 1);
    const double se = std::sqrt(var / probes);
    if (probes >= kMinProbes && se <= opts.se_target * std::abs(mean)) break;
  }
  return mean / static_cast<double>(k);
}

double worst_case_mse_bound(double kappa, double eps, uint64_t n) {
  if (kappa < 1.0) throw std::invalid_argument("worst_case_mse_bound: kappa must be >= 1");
  const double ee = std::exp(eps);
  return 4.0 * kappa * ee / (static_cast<double>(n) * (ee - 1.0) * (ee - 1.0));
}

uint64_t ceil_log2_binomial(uint64_t n, uint64_t r) {
  if (r > n) throw std::invalid_argument("ceil_log2_binomial: r > n");
  mpz_t c;
  mpz_init(c);
  mpz_bin_uiui(c, n, r);
  // ceil(log2 c) = bitlength(c - 1) for c >= 2; 0 for c = 1.
  uint64_t bits = 0;
  if (mpz_cmp_ui(c, 1) > 0) {
    mpz_sub_ui(c, c, 1);
    bits = mpz_sizeinbase(c, 2);
  }
  mpz_clear(c);
  return bits;
}

namespace {
uint64_t ceil_log2_u64(uint64_t v) {
  uint64_t bits = 0;
  while ((1ULL << bits) < v) ++bits;
  return bits;
}
}  // namespace

double comm_cost_bits(const ModuliSet& ms) {
  double subset_bits = 0.0;
  for (const auto& bp : ms.blocks) {
    subset_bits += static_cast<double>(ceil_log2_binomial(bp.m, bp.omega));
  }
  return static_cast<double>(ceil_log2_u64(ms.ell())) + subset_bits / ms.ell();
}

double baseline_bits(Mechanism mech, uint64_t k, double eps) {
  switch (mech) {
    case Mechanism::kGrr:
      return static_cast<double>(ceil_log2_u64(k));
    case Mechanism::kSs: {
      const auto bp = ss_params(static_cast<uint32_t>(k), eps);
      return static_cast<double>(ceil_log2_binomial(k, bp.omega));
    }
    case Mechanism::kOue:
      return static_cast<double>(k);
    case Mechanism::kMss:
      throw std::invalid_argument("baseline_bits: use comm_cost_bits for MSS");
  }
  throw std::invalid_argument("baseline_bits: unknown mechanism");
}

}  // namespace mss
