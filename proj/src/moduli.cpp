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

#include "mss/moduli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "mss/decoder.hpp"
#include "mss/primes.hpp"
#include "mss/rng.hpp"
#include "mss/sparse.hpp"

namespace mss {

void ModuliSearchConfig::check() const {
  if (!(kappa_max > 1.0)) throw std::invalid_argument("search config: kappa_max must be > 1");
  if (ell_max < 2) throw std::invalid_argument("search config: ell_max must be >= 2");
  if (!(beta > 1.0)) throw std::invalid_argument("search config: beta must be > 1");
  if (trials < 1) throw std::invalid_argument("search config: trials must be >= 1");
}

uint64_t t_star(uint64_t k, double beta, uint32_t ell) {
  const double band_lo = static_cast<double>(k) / (beta * ell);
  if (!(band_lo > 1.0)) {
    throw UndefinedBoundError("t_star: k/(beta*ell) <= 1, bound inapplicable");
  }
  return static_cast<uint64_t>(std::ceil(std::log(static_cast<double>(k)) / std::log(band_lo)));
}

double alpha_bound(double beta, double eps) {
  if (!(beta > 1.0)) throw std::invalid_argument("alpha_bound: beta must be > 1");
  const double ee = std::exp(eps);
  return (beta + ee) / (1.0 / beta + ee);
}

double kappa_bound(uint32_t ell, uint64_t t_star_value, double alpha) {
  if (ell <= t_star_value) return std::numeric_limits<double>::infinity();
  return alpha * static_cast<double>(ell + t_star_value) /
         static_cast<double>(ell - t_star_value);
}

double measure_design_kappa(const ModuliSet& ms) {
  WeightedDesign d = build_design(ms);
  const std::vector<double> planning(ms.ell(), 1.0);
  apply_weights(d, std::span<const double>(planning));
  // Tight inner budget: tuples whose normal equations do not converge fast
  // are far outside kappa_max anyway, so the infinity signal is enough.
  const auto est = extreme_singular_values(d.a, 0, 2500);
  if (est.rank_deficient || est.sigma_min == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return est.sigma_max / est.sigma_min;
}

namespace {

bool coverage_and_rank(const std::vector<uint32_t>& m, uint64_t k) {
  __uint128_t prod = 1;
  uint64_t rank = 0;
  bool covered = false;
  for (uint32_t v : m) {
    prod *= v;
    if (prod >= k) covered = true;
    rank += v - 1;
  }
  return covered && rank >= k;
}

uint32_t next_prime_distinct(uint32_t from, const std::vector<uint32_t>& taken, size_t skip) {
  uint64_t c = from;
  while (true) {
    c = next_prime(c);
    bool clash = false;
    for (size_t i = 0; i < taken.size(); ++i) {
      if (i != skip) clash |= taken[i] == c;
    }
    if (!clash) return static_cast<uint32_t>(c);
  }
}

// Smallest integer c with c^ell >= k.
uint64_t integer_ell_root_ceil(uint64_t k, uint32_t ell) {
  auto pow_ge = [&](uint64_t c) {
    __uint128_t p = 1;
    for (uint32_t i = 0; i < ell; ++i) {
      p *= c;
      if (p >= k) return true;
    }
    return p >= k;
  };
  uint64_t c = std::max<uint64_t>(
      2, static_cast<uint64_t>(std::floor(std::pow(static_cast<double>(k), 1.0 / ell))));
  while (c > 2 && pow_ge(c - 1)) --c;
  while (!pow_ge(c)) ++c;
  return c;
}

}  // namespace

std::vector<uint32_t> fallback_moduli(uint64_t k, uint32_t ell) {
  const uint64_t root = integer_ell_root_ceil(k, ell);
  std::vector<uint32_t> m;
  uint64_t p = root >= 2 ? (is_prime(root) ? root : next_prime(root)) : 2;
  for (uint32_t i = 0; i < ell; ++i) {
    m.push_back(static_cast<uint32_t>(p));
    p = next_prime(p);
  }
  size_t i = 0;
  while (!coverage_and_rank(m, k)) {
    m[i] = next_prime_distinct(m[i], m, i);
    i = (i + 1) % ell;
  }
  return m;
}

std::optional<ModuliSet> find_valid_moduli(uint64_t k, uint32_t ell, const ModuliSearchConfig& cfg,
                                           double eps, double* kappa_out) {
  cfg.check();
  if (ell < 2) throw std::invalid_argument("find_valid_moduli: ell must be >= 2");
  const double band_lo = static_cast<double>(k) / (cfg.beta * ell);
  const double band_hi =
      std::min(cfg.beta * static_cast<double>(k) / ell, 0.95 * static_cast<double>(k));
  if (band_hi < 2.0) return std::nullopt;
  const std::vector<uint64_t> band = primes_in_band(band_lo, band_hi);
  if (band.size() < ell) return std::nullopt;

  Rng rng = Rng::derive(cfg.seed, {0x4D0D0315ULL, k, ell, std::bit_cast<uint64_t>(eps)});
  for (uint32_t trial = 0; trial < cfg.trials; ++trial) {
    std::vector<uint32_t> m;
    for (uint32_t idx :
         sample_distinct_excluding(static_cast<uint32_t>(band.size()), UINT32_MAX, ell, rng)) {
      m.push_back(static_cast<uint32_t>(band[idx]));
    }
    while (!coverage_and_rank(m, k)) {
      const auto j = static_cast<size_t>(rng.below(ell));
      m[j] = next_prime_distinct(m[j], m, j);
    }
    std::sort(m.begin(), m.end());
    ModuliSet ms = make_moduli_set(m, k, eps);
    const double kappa = measure_design_kappa(ms);
    if (kappa <= cfg.kappa_max) {
      if (kappa_out != nullptr) *kappa_out = kappa;
      return ms;
    }
  }

  std::vector<uint32_t> m = fallback_moduli(k, ell);
  std::sort(m.begin(), m.end());
  ModuliSet ms = make_moduli_set(m, k, eps);
  const double kappa = measure_design_kappa(ms);
  if (kappa <= cfg.kappa_max) {
    if (kappa_out != nullptr) *kappa_out = kappa;
    return ms;
  }
  return std::nullopt;
}

ChooseResult choose_moduli(uint64_t k, double eps, const ModuliSearchConfig& cfg) {
  cfg.check();
  if (k < 2) throw std::invalid_argument("choose_moduli: k must be >= 2");
  const Histogram uniform{std::vector<double>(k, 1.0 / static_cast<double>(k))};

  if (k <= 3) {
    // Single modulus; smallest prime whose lone block still passes the
    // rank condition (m - 1 >= k). MSS over one block reduces to SS.
    uint64_t p = next_prime(k);
    while (p - 1 < k) p = next_prime(p);
    ChooseResult res;
    res.set = make_moduli_set({static_cast<uint32_t>(p)}, k, eps);
    res.kappa = measure_design_kappa(res.set);
    res.analytic_mse = analytic_mse(uniform, res.set, cfg.reference_n, 0.0);
    res.candidates.push_back(
        {res.set.moduli, 1, res.kappa, res.analytic_mse});
    return res;
  }

  ChooseResult best;
  bool found = false;
  double best_mse = std::numeric_limits<double>::infinity();
  for (uint32_t ell = 2; ell <= cfg.ell_max; ++ell) {
    double kappa = 0.0;
    auto cand = find_valid_moduli(k, ell, cfg, eps, &kappa);
    if (!cand) continue;
    // Ranking estimator: same quantity, coarser Hutchinson budget (the
    // candidate gaps are far larger than a few percent of noise).
    MseEstimatorOptions ranking;
    ranking.exact_threshold = 320;
    ranking.min_probes = 96;
    ranking.max_probes = 512;
    ranking.se_target = 0.04;
    ranking.cg_tol = 1e-9;
    const double mse = analytic_mse(uniform, *cand, cfg.reference_n, 0.0, 0x9A7EC5, ranking);
    best.candidates.push_back({cand->moduli, ell, kappa, mse});
    if (mse < best_mse) {
      best_mse = mse;
      best.set = std::move(*cand);
      best.kappa = kappa;
      best.analytic_mse = mse;
      found = true;
    }
  }
  if (!found) {
    throw SearchExhaustedError("choose_moduli: no valid moduli tuple for any ell");
  }
  return best;
}

uint64_t search_config_hash(const ModuliSearchConfig& cfg) {
  uint64_t h = mix64(0xC0FFEE  ^ std::bit_cast<uint64_t>(cfg.kappa_max));
  h = mix64(h ^ cfg.ell_max);
  h = mix64(h ^ std::bit_cast<uint64_t>(cfg.beta));
  h = mix64(h ^ cfg.trials);
  h = mix64(h ^ cfg.seed);
  h = mix64(h ^ cfg.reference_n);
  return h;
}

namespace {

std::string cache_key(uint64_t k, double eps, const ModuliSearchConfig& cfg) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "k%llu:e%016llx:c%016llx", static_cast<unsigned long long>(k),
                static_cast<unsigned long long>(std::bit_cast<uint64_t>(eps)),
                static_cast<unsigned long long>(search_config_hash(cfg)));
  return buf;
}

}  // namespace

std::optional<ModuliCacheEntry> moduli_cache_lookup(const std::string& path, uint64_t k,
                                                    double eps, const ModuliSearchConfig& cfg) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  const std::string key = cache_key(k, eps, cfg);
  if (!doc.contains(key)) return std::nullopt;
  const auto& e = doc[key];
  ModuliCacheEntry entry;
  entry.moduli = e.at("moduli").get<std::vector<uint32_t>>();
  entry.kappa = e.at("kappa").get<double>();
  entry.analytic_mse = e.at("analytic_mse").get<double>();
  return entry;
}

void moduli_cache_store(const std::string& path, uint64_t k, double eps,
                        const ModuliSearchConfig& cfg, const ModuliCacheEntry& entry) {
  nlohmann::json doc = nlohmann::json::object();
  {
    std::ifstream in(path);
    if (in) {
      try {
        in >> doc;
      } catch (const nlohmann::json::exception&) {
        doc = nlohmann::json::object();
      }
    }
  }
  doc[cache_key(k, eps, cfg)] = {
      {"moduli", entry.moduli}, {"kappa", entry.kappa}, {"analytic_mse", entry.analytic_mse}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("moduli cache: cannot write " + path);
  out << doc.dump(1) << "\n";
}

ChooseResult choose_moduli_cached(uint64_t k, double eps, const ModuliSearchConfig& cfg,
                                  const std::string& cache_path) {
  if (!cache_path.empty()) {
    if (auto hit = moduli_cache_lookup(cache_path, k, eps, cfg)) {
      ChooseResult res;
      res.set = make_moduli_set(hit->moduli, k, eps);
      res.kappa = hit->kappa;
      res.analytic_mse = hit->analytic_mse;
      return res;
    }
  }
  ChooseResult res = choose_moduli(k, eps, cfg);
  if (!cache_path.empty()) {
    moduli_cache_store(cache_path, k, eps, cfg,
                       {res.set.moduli, res.kappa, res.analytic_mse});
  }
  return res;
}

}  // namespace mss
