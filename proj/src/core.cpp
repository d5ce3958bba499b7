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

#include "mss/core.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mss {

double Histogram::sum() const {
  double s = 0.0;
  for (double v : f) s += v;
  return s;
}

void check_distribution(const Histogram& h) {
  if (h.f.empty()) throw std::invalid_argument("histogram: empty");
  for (double v : h.f) {
    if (!(v >= 0.0)) throw std::invalid_argument("histogram: negative or NaN entry");
  }
  if (std::abs(h.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("histogram: entries do not sum to 1");
  }
}

Histogram clamp_renormalize(const Histogram& h) {
  Histogram out = h;
  double s = 0.0;
  for (double& v : out.f) {
    if (v < 0.0) v = 0.0;
    s += v;
  }
  if (s > 0.0) {
    for (double& v : out.f) v /= s;
  } else if (!out.f.empty()) {
    const double u = 1.0 / static_cast<double>(out.f.size());
    for (double& v : out.f) v = u;
  }
  return out;
}

void check_dataset(const Dataset& d) {
  if (d.k == 0) throw std::invalid_argument("dataset: k must be positive");
  for (uint32_t v : d.values) {
    if (v >= d.k) throw std::invalid_argument("dataset: value out of range");
  }
}

SSBlockParams ss_params(uint32_t m, double eps) {
  if (m < 2) throw std::invalid_argument("ss_params: m must be >= 2");
  if (!(eps > 0.0)) throw std::invalid_argument("ss_params: eps must be positive");
  const double ee = std::exp(eps);
  // Round half away from zero, then clamp to [1, m-1] so p and q stay
  // well-defined at extreme eps.
  auto omega = static_cast<int64_t>(std::floor(static_cast<double>(m) / (ee + 1.0) + 0.5));
  if (omega < 1) omega = 1;
  if (omega > m - 1) omega = m - 1;

  SSBlockParams bp;
  bp.m = m;
  bp.omega = static_cast<uint32_t>(omega);
  bp.eps = eps;
  const double w = static_cast<double>(omega);
  const double md = static_cast<double>(m);
  const double denom = w * ee + md - w;
  bp.p = w * ee / denom;
  bp.q = (w * ee * (w - 1.0) + (md - w) * w) / ((md - 1.0) * denom);
  bp.pi = bp.q + (bp.p - bp.q) / md;
  return bp;
}

const char* to_string(ModuliCheck c) {
  switch (c) {
    case ModuliCheck::kOk: return "ok";
    case ModuliCheck::kCoprimalityFailure: return "coprimality-failure";
    case ModuliCheck::kCoverageFailure: return "coverage-failure";
    case ModuliCheck::kRankFailure: return "rank-failure";
  }
  return "unknown";
}

ModuliCheck validate_moduli(const std::vector<uint32_t>& moduli, uint64_t k) {
  if (moduli.empty()) throw std::invalid_argument("validate_moduli: empty list");
  for (uint32_t m : moduli) {
    if (m < 2) throw std::invalid_argument("validate_moduli: modulus < 2");
  }
  for (size_t i = 0; i < moduli.size(); ++i) {
    for (size_t j = i + 1; j < moduli.size(); ++j) {
      if (std::gcd(moduli[i], moduli[j]) != 1) return ModuliCheck::kCoprimalityFailure;
    }
  }
  __uint128_t prod = 1;
  bool covered = false;
  for (uint32_t m : moduli) {
    prod *= m;
    if (prod >= k) {
      covered = true;
      break;
    }
  }
  if (!covered) return ModuliCheck::kCoverageFailure;
  uint64_t rank_sum = 0;
  for (uint32_t m : moduli) rank_sum += m - 1;
  if (rank_sum < k) return ModuliCheck::kRankFailure;
  return ModuliCheck::kOk;
}

uint64_t ModuliSet::total_rows() const {
  uint64_t t = 0;
  for (uint32_t m : moduli) t += m;
  return t;
}

ModuliSet make_moduli_set(std::vector<uint32_t> moduli, uint64_t k, double eps) {
  if (k == 0) throw std::invalid_argument("make_moduli_set: k must be positive");
  // Coprimality and CRT coverage are required for the encoding to make
  // sense at all; the rank condition only matters for decoding and is
  // enforced by validate_moduli / the moduli search.
  const ModuliCheck check = validate_moduli(moduli, k);
  if (check == ModuliCheck::kCoprimalityFailure || check == ModuliCheck::kCoverageFailure) {
    throw std::invalid_argument(std::string("make_moduli_set: ") + to_string(check));
  }
  ModuliSet ms;
  ms.moduli = std::move(moduli);
  ms.k = k;
  ms.eps = eps;
  ms.blocks.reserve(ms.moduli.size());
  for (uint32_t m : ms.moduli) ms.blocks.push_back(ss_params(m, eps));
  return ms;
}

std::vector<uint32_t> rns_encode(uint64_t x, const ModuliSet& ms) {
  if (x >= ms.k) throw std::invalid_argument("rns_encode: x out of range");
  std::vector<uint32_t> r(ms.moduli.size());
  for (size_t j = 0; j < ms.moduli.size(); ++j) {
    r[j] = static_cast<uint32_t>(x % ms.moduli[j]);
  }
  return r;
}

}  // namespace mss
