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

#include "mss/attacks.hpp"

#include <cmath>
#include <stdexcept>

namespace mss {

std::vector<uint64_t> residue_multiplicity(uint64_t k, uint32_t m) {
  if (m < 1) throw std::invalid_argument("residue_multiplicity: m must be >= 1");
  const uint64_t e = k / m;
  const uint64_t r = k % m;
  std::vector<uint64_t> n(m);
  for (uint32_t z = 0; z < m; ++z) n[z] = z < r ? e + 1 : e;
  return n;
}

double dra_grr(uint64_t k, double eps) {
  const double ee = std::exp(eps);
  return ee / (ee + static_cast<double>(k) - 1.0);
}

double dra_ss(uint64_t k, double eps) {
  const auto bp = ss_params(static_cast<uint32_t>(k), eps);
  const double ee = std::exp(eps);
  return ee / (bp.omega * ee + static_cast<double>(k) - bp.omega);
}

double dra_rappor_symmetric(uint64_t k, double eps) {
  const double half = eps / 2.0;
  // Second term evaluated in log-space; (e^{eps/2}+1)^{k-1} overflows for
  // large k otherwise.
  const double log_t2 = static_cast<double>(k - 1) * (half - std::log(std::exp(half) + 1.0)) +
                        std::log(std::expm1(half));
  const double t2 = eps > 0.0 ? std::exp(log_t2) : 0.0;
  return (std::exp(half) - t2) / static_cast<double>(k);
}

double dra_mss_upper(const ModuliSet& ms) {
  double total = 0.0;
  for (const auto& bp : ms.blocks) {
    const auto cj = static_cast<double>((ms.k + bp.m - 1) / bp.m);  // ceil(k/m)
    total += bp.p / (static_cast<double>(bp.omega) * cj);
  }
  return total / ms.ell();
}

namespace {

double log_binom(uint64_t n, uint64_t r) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(r) + 1.0) -
         std::lgamma(static_cast<double>(n - r) + 1.0);
}

// E[1/(n_z + T)] where T = d*e + H and H ~ Hypergeometric(M, K, d) counts
// heavy classes (weight e+1) among the d fillers.
double filler_expectation(uint64_t n_z, uint64_t e, uint64_t big_m, uint64_t big_k, uint64_t d) {
  const uint64_t h_lo = d > big_m - big_k ? d - (big_m - big_k) : 0;
  const uint64_t h_hi = std::min(d, big_k);
  const double log_denom = log_binom(big_m, d);
  double acc = 0.0;
  for (uint64_t h = h_lo; h <= h_hi; ++h) {
    const double log_p = log_binom(big_k, h) + log_binom(big_m - big_k, d - h) - log_denom;
    acc += std::exp(log_p) / static_cast<double>(n_z + d * e + h);
  }
  return acc;
}

}  // namespace

double dra_mss_exact(const ModuliSet& ms) {
  const uint64_t k = ms.k;
  double total = 0.0;
  for (const auto& bp : ms.blocks) {
    const uint64_t e = k / bp.m;
    const uint64_t r = k % bp.m;
    const uint64_t d = bp.omega - 1;
    double block = 0.0;
    // Heavy classes (n_z = e+1; there are r of them).
    if (r > 0) {
      const double ev = filler_expectation(e + 1, e, bp.m - 1, r - 1, d);
      block += static_cast<double>(r) * (static_cast<double>(e + 1) / k) * ev;
    }
    // Light classes (n_z = e; m - r of them); skip when empty (e = 0).
    if (e > 0 && bp.m > r) {
      const double ev = filler_expectation(e, e, bp.m - 1, r, d);
      block += static_cast<double>(bp.m - r) * (static_cast<double>(e) / k) * ev;
    }
    total += bp.p * block;
  }
  return total / ms.ell();
}

double dra_pgr_full(uint64_t q, uint32_t t, double eps) {
  if (q < 2 || t < 2) throw std::invalid_argument("dra_pgr_full: need q >= 2, t >= 2");
  double big_k = 0.0, c_set = 0.0;
  double qp = 1.0;
  for (uint32_t i = 0; i < t; ++i) {
    big_k += qp;  // 1 + q + ... + q^{t-1}
    if (i + 1 < t) c_set += qp;
    qp *= static_cast<double>(q);
  }
  const double ee = std::exp(eps);
  return ee / (big_k + (ee - 1.0) * c_set);
}

uint32_t attack_guess_ss(const std::vector<uint32_t>& subset, Rng& rng) {
  return subset[rng.below(subset.size())];
}

uint32_t attack_guess_oue(const std::vector<uint8_t>& bits, uint64_t k, Rng& rng) {
  uint64_t set = 0;
  for (uint8_t b : bits) set += b;
  if (set == 0) return static_cast<uint32_t>(rng.below(k));
  uint64_t pick = rng.below(set);
  for (uint32_t a = 0; a < bits.size(); ++a) {
    if (bits[a]) {
      if (pick == 0) return a;
      --pick;
    }
  }
  return 0;  // unreachable
}

uint32_t attack_guess_mss(const MssReport& report, const ModuliSet& ms, Rng& rng) {
  const uint32_t m = ms.moduli[report.block];
  const uint64_t e = ms.k / m;
  const uint64_t r = ms.k % m;
  uint64_t support = 0;
  for (uint32_t z : report.subset) support += z < r ? e + 1 : e;
  if (support == 0) {
    // Empty posterior support; fall back to a uniform guess over [k].
    return static_cast<uint32_t>(rng.below(ms.k));
  }
  uint64_t pick = rng.below(support);
  for (uint32_t z : report.subset) {
    const uint64_t nz = z < r ? e + 1 : e;
    if (pick < nz) return static_cast<uint32_t>(z + pick * m);
    pick -= nz;
  }
  return 0;  // unreachable
}

namespace {

// One perturb-and-attack round for a single user; returns 1 on success.
uint32_t attack_user(const MechanismKind& kind, uint32_t x, Rng& rng) {
  switch (kind.mech) {
    case Mechanism::kGrr: {
      const uint32_t y = grr_perturb(x, kind.k, kind.eps, rng);
      return y == x ? 1u : 0u;
    }
    case Mechanism::kSs: {
      const auto z = ss_perturb(x, kind.k, kind.eps, rng);
      return attack_guess_ss(z, rng) == x ? 1u : 0u;
    }
    case Mechanism::kOue: {
      const auto bits = oue_perturb(x, kind.k, kind.eps, rng);
      return attack_guess_oue(bits, kind.k, rng) == x ? 1u : 0u;
    }
    case Mechanism::kMss: {
      const MssReport rep = mss_perturb(x, *kind.moduli, rng);
      return attack_guess_mss(rep, *kind.moduli, rng) == x ? 1u : 0u;
    }
  }
  return 0;
}

}  // namespace

DraEstimate empirical_dra(const MechanismKind& kind, const Dataset& data, uint32_t trials,
                          uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("empirical_dra: trials must be >= 1");
  check_dataset(data);
  if (data.k != kind.k) throw std::invalid_argument("empirical_dra: domain mismatch");
  if (kind.mech == Mechanism::kMss && !kind.moduli) {
    throw std::invalid_argument("empirical_dra: MSS needs moduli");
  }

  const int64_t n = static_cast<int64_t>(data.values.size());
  std::vector<uint64_t> hits(trials, 0);
#pragma omp parallel for schedule(dynamic)
  for (int64_t t = 0; t < static_cast<int64_t>(trials); ++t) {
    uint64_t local = 0;
    for (int64_t i = 0; i < n; ++i) {
      Rng rng = Rng::derive(seed, {0xA77AC4ULL, static_cast<uint64_t>(t), static_cast<uint64_t>(i)});
      local += attack_user(kind, data.values[i], rng);
    }
    hits[t] = local;
  }
  uint64_t success = 0;
  for (uint64_t h : hits) success += h;

  DraEstimate est;
  est.samples = static_cast<uint64_t>(n) * trials;
  est.empirical = static_cast<double>(success) / static_cast<double>(est.samples);
  est.stderr_ = std::sqrt(est.empirical * (1.0 - est.empirical) /
                          static_cast<double>(est.samples));
  switch (kind.mech) {
    case Mechanism::kGrr: est.analytic = dra_grr(kind.k, kind.eps); break;
    case Mechanism::kSs: est.analytic = dra_ss(kind.k, kind.eps); break;
    case Mechanism::kMss: est.analytic = dra_mss_exact(*kind.moduli); break;
    case Mechanism::kOue: break;  // no closed form for OUE; empirical only
  }
  return est;
}

}  // namespace mss
