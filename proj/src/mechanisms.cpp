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

#include "mss/mechanisms.hpp"

#include <algorithm>
#include <cmath>

namespace mss {

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kGrr: return "grr";
    case Mechanism::kSs: return "ss";
    case Mechanism::kOue: return "oue";
    case Mechanism::kMss: return "mss";
  }
  return "unknown";
}

Mechanism mechanism_from_string(const std::string& name) {
  if (name == "grr") return Mechanism::kGrr;
  if (name == "ss") return Mechanism::kSs;
  if (name == "oue") return Mechanism::kOue;
  if (name == "mss") return Mechanism::kMss;
  throw std::invalid_argument("unknown mechanism: " + name);
}

MechanismKind MechanismKind::mss(ModuliSet ms) {
  MechanismKind kind;
  kind.mech = Mechanism::kMss;
  kind.k = ms.k;
  kind.eps = ms.eps;
  kind.moduli = std::move(ms);
  return kind;
}

uint32_t grr_perturb(uint32_t x, uint64_t k, double eps, Rng& rng) {
  if (x >= k) throw std::invalid_argument("grr_perturb: x out of range");
  if (k < 2) throw std::invalid_argument("grr_perturb: k must be >= 2");
  const double ee = std::exp(eps);
  const double p = ee / (ee + static_cast<double>(k) - 1.0);
  if (rng.bernoulli(p)) return x;
  const auto t = static_cast<uint32_t>(rng.below(k - 1));
  return t < x ? t : t + 1;
}

std::vector<uint32_t> ss_perturb_block(uint32_t r, const SSBlockParams& bp, Rng& rng) {
  std::vector<uint32_t> subset;
  if (rng.bernoulli(bp.p)) {
    subset = sample_distinct_excluding(bp.m, r, bp.omega - 1, rng);
    subset.push_back(r);
  } else {
    subset = sample_distinct_excluding(bp.m, r, bp.omega, rng);
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

std::vector<uint32_t> ss_perturb(uint32_t x, uint64_t k, double eps, Rng& rng) {
  if (x >= k) throw std::invalid_argument("ss_perturb: x out of range");
  return ss_perturb_block(x, ss_params(static_cast<uint32_t>(k), eps), rng);
}

MssReport mss_perturb(uint32_t x, const ModuliSet& ms, Rng& rng) {
  if (x >= ms.k) throw std::invalid_argument("mss_perturb: x out of range");
  MssReport rep;
  rep.block = static_cast<uint32_t>(rng.below(ms.ell()));
  const uint32_t r = x % ms.moduli[rep.block];
  rep.subset = ss_perturb_block(r, ms.blocks[rep.block], rng);
  return rep;
}

std::vector<uint8_t> oue_perturb(uint32_t x, uint64_t k, double eps, Rng& rng) {
  if (x >= k) throw std::invalid_argument("oue_perturb: x out of range");
  const double q = 1.0 / (std::exp(eps) + 1.0);
  std::vector<uint8_t> bits(k);
  for (uint64_t a = 0; a < k; ++a) {
    const double pr = (a == x) ? 0.5 : q;
    bits[a] = rng.bernoulli(pr) ? 1 : 0;
  }
  return bits;
}

namespace {
Histogram debias_counts(const std::vector<uint64_t>& counts, double p, double q, uint64_t n) {
  if (n == 0) throw std::invalid_argument("estimate: n must be positive");
  Histogram h;
  h.f.resize(counts.size());
  const double nd = static_cast<double>(n);
  for (size_t v = 0; v < counts.size(); ++v) {
    h.f[v] = (static_cast<double>(counts[v]) / nd - q) / (p - q);
  }
  return h;
}
}  // namespace

Histogram grr_estimate(const std::vector<uint64_t>& counts, double eps, uint64_t n) {
  const double ee = std::exp(eps);
  const double k = static_cast<double>(counts.size());
  return debias_counts(counts, ee / (ee + k - 1.0), 1.0 / (ee + k - 1.0), n);
}

Histogram ss_estimate(const std::vector<uint64_t>& member_counts, double eps, uint64_t n) {
  const auto bp = ss_params(static_cast<uint32_t>(member_counts.size()), eps);
  return debias_counts(member_counts, bp.p, bp.q, n);
}

Histogram oue_estimate(const std::vector<uint64_t>& bit_sums, double eps, uint64_t n) {
  return debias_counts(bit_sums, 0.5, 1.0 / (std::exp(eps) + 1.0), n);
}

namespace {

uint64_t binom_checked(uint64_t n, uint64_t r, uint64_t cap) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  __uint128_t c = 1;
  for (uint64_t i = 1; i <= r; ++i) {
    c = c * (n - r + i) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<uint64_t>(c);
}

std::vector<std::vector<uint32_t>> enumerate_subsets(uint32_t m, uint32_t w) {
  std::vector<std::vector<uint32_t>> all;
  std::vector<uint32_t> cur(w);
  for (uint32_t i = 0; i < w; ++i) cur[i] = i;
  while (true) {
    all.push_back(cur);
    int i = static_cast<int>(w) - 1;
    while (i >= 0 && cur[i] == m - w + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (uint32_t j = i + 1; j < w; ++j) cur[j] = cur[j - 1] + 1;
  }
  return all;
}

}  // namespace

ReportSpace::ReportSpace(const MechanismKind& kind) : kind_(kind) {
  constexpr uint64_t kMssCap = 1'000'000;
  switch (kind.mech) {
    case Mechanism::kGrr:
      size_ = kind.k;
      break;
    case Mechanism::kSs: {
      if (kind.k > 12) throw CapacityError("report space: SS requires k <= 12");
      const auto bp = ss_params(static_cast<uint32_t>(kind.k), kind.eps);
      subsets_.push_back(enumerate_subsets(bp.m, bp.omega));
      size_ = subsets_[0].size();
      break;
    }
    case Mechanism::kOue:
      if (kind.k > 12) throw CapacityError("report space: OUE requires k <= 12");
      size_ = 1ULL << kind.k;
      break;
    case Mechanism::kMss: {
      if (!kind.moduli) throw std::invalid_argument("report space: MSS needs moduli");
      uint64_t total = 0;
      for (const auto& bp : kind.moduli->blocks) {
        total += binom_checked(bp.m, bp.omega, kMssCap);
        if (total > kMssCap) throw CapacityError("report space: MSS subset count over capacity");
      }
      for (const auto& bp : kind.moduli->blocks) {
        subsets_.push_back(enumerate_subsets(bp.m, bp.omega));
      }
      size_ = total;
      break;
    }
  }
}

std::vector<double> ReportSpace::pmf(uint32_t x) const {
  if (x >= kind_.k) throw std::invalid_argument("pmf: x out of range");
  std::vector<double> probs(size_, 0.0);
  switch (kind_.mech) {
    case Mechanism::kGrr: {
      const double ee = std::exp(kind_.eps);
      const double q = 1.0 / (ee + static_cast<double>(kind_.k) - 1.0);
      std::fill(probs.begin(), probs.end(), q);
      probs[x] = ee * q;
      break;
    }
    case Mechanism::kSs:
    case Mechanism::kMss: {
      const bool is_mss = kind_.mech == Mechanism::kMss;
      const double block_prob = is_mss ? 1.0 / kind_.moduli->ell() : 1.0;
      uint64_t offset = 0;
      const size_t nblocks = subsets_.size();
      for (size_t j = 0; j < nblocks; ++j) {
        const SSBlockParams bp = is_mss ? kind_.moduli->blocks[j]
                                        : ss_params(static_cast<uint32_t>(kind_.k), kind_.eps);
        const uint32_t r = is_mss ? x % bp.m : x;
        const double with_r =
            bp.p / static_cast<double>(binom_checked(bp.m - 1, bp.omega - 1, UINT64_MAX / 2));
        const double without_r =
            (1.0 - bp.p) / static_cast<double>(binom_checked(bp.m - 1, bp.omega, UINT64_MAX / 2));
        for (size_t s = 0; s < subsets_[j].size(); ++s) {
          const auto& sub = subsets_[j][s];
          const bool has_r = std::binary_search(sub.begin(), sub.end(), r);
          probs[offset + s] = block_prob * (has_r ? with_r : without_r);
        }
        offset += subsets_[j].size();
      }
      break;
    }
    case Mechanism::kOue: {
      const double ee = std::exp(kind_.eps);
      const double q = 1.0 / (ee + 1.0);
      for (uint64_t mask = 0; mask < size_; ++mask) {
        double pr = 1.0;
        for (uint64_t a = 0; a < kind_.k; ++a) {
          const double p1 = (a == x) ? 0.5 : q;
          pr *= (mask >> a & 1) ? p1 : (1.0 - p1);
        }
        probs[mask] = pr;
      }
      break;
    }
  }
  return probs;
}

}  // namespace mss
