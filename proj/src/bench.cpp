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

#include "mss/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mss/attacks.hpp"
#include "mss/decoder.hpp"

namespace mss {

namespace {
constexpr uint64_t kDatasetTag = 0xDA7A5E7ULL;
constexpr uint64_t kUserTag = 0x0552ULL;
}  // namespace

DistSpec DistSpec::parse(const std::string& text) {
  DistSpec spec;
  if (text == "uniform") {
    spec.dist = Dist::kUniform;
  } else if (text == "spike") {
    spec.dist = Dist::kSpike;
  } else if (text == "zipf") {
    spec.dist = Dist::kZipf;
  } else if (text.rfind("zipf:", 0) == 0) {
    spec.dist = Dist::kZipf;
    spec.s = std::stod(text.substr(5));
    if (!(spec.s > 0.0)) throw std::invalid_argument("zipf exponent must be positive");
  } else {
    throw std::invalid_argument("unknown distribution: " + text);
  }
  return spec;
}

std::string DistSpec::str() const {
  switch (dist) {
    case Dist::kUniform: return "uniform";
    case Dist::kSpike: return "spike";
    case Dist::kZipf: {
      std::ostringstream os;
      os << "zipf:" << s;
      return os.str();
    }
  }
  return "unknown";
}

Histogram gen_zipf(uint64_t k, double s) {
  if (k < 1) throw std::invalid_argument("gen_zipf: k must be >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("gen_zipf: s must be positive");
  Histogram h;
  h.f.resize(k);
  double z = 0.0;
  for (uint64_t v = 0; v < k; ++v) {
    h.f[v] = std::pow(static_cast<double>(v + 1), -s);
    z += h.f[v];
  }
  for (double& v : h.f) v /= z;
  return h;
}

Histogram gen_spike(uint64_t k) {
  if (k < 1) throw std::invalid_argument("gen_spike: k must be >= 1");
  Histogram h;
  h.f.assign(k, 0.0);
  h.f[0] = 1.0;
  return h;
}

Histogram gen_uniform(uint64_t k) {
  if (k < 1) throw std::invalid_argument("gen_uniform: k must be >= 1");
  Histogram h;
  h.f.assign(k, 1.0 / static_cast<double>(k));
  return h;
}

Histogram make_histogram(const DistSpec& spec, uint64_t k) {
  switch (spec.dist) {
    case Dist::kUniform: return gen_uniform(k);
    case Dist::kSpike: return gen_spike(k);
    case Dist::kZipf: return gen_zipf(k, spec.s);
  }
  throw std::invalid_argument("make_histogram: unknown distribution");
}

namespace {

std::vector<double> cumulative(const Histogram& f) {
  std::vector<double> cum(f.k());
  double acc = 0.0;
  for (uint64_t v = 0; v < f.k(); ++v) {
    acc += f.f[v];
    cum[v] = acc;
  }
  cum.back() = 1.0;
  return cum;
}

uint32_t draw_from_cum(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return static_cast<uint32_t>(std::min<size_t>(it - cum.begin(), cum.size() - 1));
}

}  // namespace

Dataset draw_dataset(const Histogram& f, uint64_t n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("draw_dataset: n must be >= 1");
  const std::vector<double> cum = cumulative(f);
  Dataset d;
  d.k = f.k();
  d.values.resize(n);
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
    Rng rng = Rng::derive(seed, {kDatasetTag, static_cast<uint64_t>(i)});
    d.values[i] = draw_from_cum(cum, rng.next_double());
  }
  return d;
}

Dataset draw_dataset(const Histogram& f, uint64_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("draw_dataset: n must be >= 1");
  const std::vector<double> cum = cumulative(f);
  Dataset d;
  d.k = f.k();
  d.values.resize(n);
  for (uint64_t i = 0; i < n; ++i) d.values[i] = draw_from_cum(cum, rng.next_double());
  return d;
}

void ExperimentConfig::check() const {
  if (mechs.empty()) throw std::invalid_argument("config: no mechanisms");
  if (k < 2) throw std::invalid_argument("config: k must be >= 2");
  if (n < 1) throw std::invalid_argument("config: n must be >= 1");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (eps_grid.empty()) throw std::invalid_argument("config: empty eps grid");
  for (double e : eps_grid) {
    if (!(e > 0.0)) throw std::invalid_argument("config: eps must be positive");
  }
  if (lambda_policy == LambdaPolicy::kFixed && lambda_value < 0.0) {
    throw std::invalid_argument("config: lambda must be >= 0");
  }
  search.check();
}

BlockCounts perturb_and_aggregate_serial(const Dataset& data, const ModuliSet& ms, uint64_t seed) {
  BlockCounts bc;
  bc.counts.resize(ms.ell());
  for (uint32_t j = 0; j < ms.ell(); ++j) bc.counts[j].assign(ms.moduli[j], 0);
  bc.block_users.assign(ms.ell(), 0);
  for (uint64_t i = 0; i < data.values.size(); ++i) {
    Rng rng = Rng::derive(seed, {kUserTag, i});
    const MssReport rep = mss_perturb(data.values[i], ms, rng);
    ++bc.block_users[rep.block];
    for (uint32_t a : rep.subset) ++bc.counts[rep.block][a];
  }
  bc.total_users = data.values.size();
  return bc;
}

BlockCounts perturb_and_aggregate(const Dataset& data, const ModuliSet& ms, uint64_t seed) {
  const int threads = omp_get_max_threads();
  if (threads <= 1 || data.values.size() < 4096) {
    return perturb_and_aggregate_serial(data, ms, seed);
  }
  std::vector<BlockCounts> shards(threads);
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    BlockCounts local;
    local.counts.resize(ms.ell());
    for (uint32_t j = 0; j < ms.ell(); ++j) local.counts[j].assign(ms.moduli[j], 0);
    local.block_users.assign(ms.ell(), 0);
#pragma omp for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(data.values.size()); ++i) {
      Rng rng = Rng::derive(seed, {kUserTag, static_cast<uint64_t>(i)});
      const MssReport rep = mss_perturb(data.values[i], ms, rng);
      ++local.block_users[rep.block];
      for (uint32_t a : rep.subset) ++local.counts[rep.block][a];
    }
    shards[tid] = std::move(local);
  }
  BlockCounts bc = std::move(shards[0]);
  for (int t = 1; t < threads; ++t) {
    for (uint32_t j = 0; j < ms.ell(); ++j) {
      bc.block_users[j] += shards[t].block_users[j];
      for (size_t a = 0; a < bc.counts[j].size(); ++a) bc.counts[j][a] += shards[t].counts[j][a];
    }
  }
  bc.total_users = data.values.size();
  return bc;
}

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct TrialResult {
  double mse = 0.0;
  double decode_ms = 0.0;
  double dra = std::numeric_limits<double>::quiet_NaN();
  int64_t solver_iters = 0;
};

double mse_against(const Histogram& estimate, const Histogram& truth) {
  double acc = 0.0;
  for (uint64_t v = 0; v < truth.k(); ++v) {
    const double dlt = estimate.f[v] - truth.f[v];
    acc += dlt * dlt;
  }
  return acc / static_cast<double>(truth.k());
}

// Per-mechanism context resolved once per (mechanism, eps) cell.
struct CellContext {
  MechanismKind kind;
  double bits = 0.0;
  double dra_analytic = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double lambda = 0.0;
  const WeightedDesign* base_design = nullptr;  // MSS only (unweighted)
};

TrialResult run_trial_grr(const CellContext& ctx, const ExperimentConfig& cfg,
                          const Histogram& truth, const Dataset& data, uint64_t trial_seed) {
  std::vector<uint64_t> counts(cfg.k, 0);
  uint64_t dra_hits = 0;
  for (uint64_t i = 0; i < data.values.size(); ++i) {
    Rng rng = Rng::derive(trial_seed, {kUserTag, i});
    const uint32_t y = grr_perturb(data.values[i], cfg.k, ctx.kind.eps, rng);
    ++counts[y];
    if (cfg.measure_dra) dra_hits += (y == data.values[i]) ? 1 : 0;
  }
  TrialResult out;
  const double t0 = cfg.timing ? now_ms() : 0.0;
  Histogram est = grr_estimate(counts, ctx.kind.eps, data.values.size());
  if (cfg.timing) out.decode_ms = now_ms() - t0;
  if (cfg.project) est = clamp_renormalize(est);
  out.mse = mse_against(est, truth);
  if (cfg.measure_dra) out.dra = static_cast<double>(dra_hits) / data.values.size();
  return out;
}

TrialResult run_trial_ss(const CellContext& ctx, const ExperimentConfig& cfg,
                         const Histogram& truth, const Dataset& data, uint64_t trial_seed) {
  const auto bp = ss_params(static_cast<uint32_t>(cfg.k), ctx.kind.eps);
  std::vector<uint64_t> member(cfg.k, 0);
  uint64_t dra_hits = 0;
  for (uint64_t i = 0; i < data.values.size(); ++i) {
    Rng rng = Rng::derive(trial_seed, {kUserTag, i});
    const auto subset = ss_perturb_block(data.values[i], bp, rng);
    for (uint32_t a : subset) ++member[a];
    if (cfg.measure_dra) {
      dra_hits += attack_guess_ss(subset, rng) == data.values[i] ? 1 : 0;
    }
  }
  TrialResult out;
  const double t0 = cfg.timing ? now_ms() : 0.0;
  Histogram est = ss_estimate(member, ctx.kind.eps, data.values.size());
  if (cfg.timing) out.decode_ms = now_ms() - t0;
  if (cfg.project) est = clamp_renormalize(est);
  out.mse = mse_against(est, truth);
  if (cfg.measure_dra) out.dra = static_cast<double>(dra_hits) / data.values.size();
  return out;
}

TrialResult run_trial_oue(const CellContext& ctx, const ExperimentConfig& cfg,
                          const Histogram& truth, const Dataset& data, uint64_t trial_seed) {
  std::vector<uint64_t> sums(cfg.k, 0);
  uint64_t dra_hits = 0;
  for (uint64_t i = 0; i < data.values.size(); ++i) {
    Rng rng = Rng::derive(trial_seed, {kUserTag, i});
    const auto bits = oue_perturb(data.values[i], cfg.k, ctx.kind.eps, rng);
    for (uint64_t a = 0; a < cfg.k; ++a) sums[a] += bits[a];
    if (cfg.measure_dra) {
      dra_hits += attack_guess_oue(bits, cfg.k, rng) == data.values[i] ? 1 : 0;
    }
  }
  TrialResult out;
  const double t0 = cfg.timing ? now_ms() : 0.0;
  Histogram est = oue_estimate(sums, ctx.kind.eps, data.values.size());
  if (cfg.timing) out.decode_ms = now_ms() - t0;
  if (cfg.project) est = clamp_renormalize(est);
  out.mse = mse_against(est, truth);
  if (cfg.measure_dra) out.dra = static_cast<double>(dra_hits) / data.values.size();
  return out;
}

TrialResult run_trial_mss(const CellContext& ctx, const ExperimentConfig& cfg,
                          const Histogram& truth, const Dataset& data, uint64_t trial_seed) {
  const ModuliSet& ms = *ctx.kind.moduli;
  TrialResult out;
  BlockCounts bc;
  uint64_t dra_hits = 0;

  if (cfg.timing) {
    // Materialize reports so the single aggregation pass is timed on its own.
    std::vector<MssReport> reports(data.values.size());
    for (uint64_t i = 0; i < data.values.size(); ++i) {
      Rng rng = Rng::derive(trial_seed, {kUserTag, i});
      reports[i] = mss_perturb(data.values[i], ms, rng);
      if (cfg.measure_dra) {
        dra_hits += attack_guess_mss(reports[i], ms, rng) == data.values[i] ? 1 : 0;
      }
    }
    const double t0 = now_ms();
    bc = aggregate(reports, ms);
    out.decode_ms = now_ms() - t0;
  } else {
    bc.counts.resize(ms.ell());
    for (uint32_t j = 0; j < ms.ell(); ++j) bc.counts[j].assign(ms.moduli[j], 0);
    bc.block_users.assign(ms.ell(), 0);
    for (uint64_t i = 0; i < data.values.size(); ++i) {
      Rng rng = Rng::derive(trial_seed, {kUserTag, i});
      const MssReport rep = mss_perturb(data.values[i], ms, rng);
      ++bc.block_users[rep.block];
      for (uint32_t a : rep.subset) ++bc.counts[rep.block][a];
      if (cfg.measure_dra) {
        dra_hits += attack_guess_mss(rep, ms, rng) == data.values[i] ? 1 : 0;
      }
    }
    bc.total_users = data.values.size();
  }

  const double t0 = cfg.timing ? now_ms() : 0.0;
  const std::vector<double> s = debias(bc, ms);
  WeightedDesign design = *ctx.base_design;
  apply_weights(design, std::span<const uint64_t>(bc.block_users));
  DecodeResult dec = estimate(design, s, ctx.lambda);
  if (cfg.timing) out.decode_ms += now_ms() - t0;

  if (cfg.project) dec.estimate = clamp_renormalize(dec.estimate);
  out.mse = mse_against(dec.estimate, truth);
  out.solver_iters = dec.solver.iterations;
  if (cfg.measure_dra) out.dra = static_cast<double>(dra_hits) / data.values.size();
  return out;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  const Histogram truth = make_histogram(cfg.dist, cfg.k);
  std::vector<ExperimentRecord> records;
  records.reserve(cfg.mechs.size() * cfg.eps_grid.size() * cfg.trials);

  for (Mechanism mech : cfg.mechs) {
    for (double eps : cfg.eps_grid) {
      CellContext ctx;
      WeightedDesign base_design;
      switch (mech) {
        case Mechanism::kGrr:
          ctx.kind = MechanismKind::grr(cfg.k, eps);
          ctx.bits = baseline_bits(mech, cfg.k, eps);
          ctx.dra_analytic = dra_grr(cfg.k, eps);
          break;
        case Mechanism::kSs:
          ctx.kind = MechanismKind::ss(cfg.k, eps);
          ctx.bits = baseline_bits(mech, cfg.k, eps);
          ctx.dra_analytic = dra_ss(cfg.k, eps);
          break;
        case Mechanism::kOue:
          ctx.kind = MechanismKind::oue(cfg.k, eps);
          ctx.bits = baseline_bits(mech, cfg.k, eps);
          break;
        case Mechanism::kMss: {
          const ChooseResult chosen =
              choose_moduli_cached(cfg.k, eps, cfg.search, cfg.moduli_cache);
          ctx.kind = MechanismKind::mss(chosen.set);
          ctx.bits = comm_cost_bits(*ctx.kind.moduli);
          ctx.dra_analytic = dra_mss_exact(*ctx.kind.moduli);
          ctx.kappa = chosen.kappa;
          base_design = build_design(*ctx.kind.moduli);
          ctx.base_design = &base_design;
          if (cfg.lambda_policy == LambdaPolicy::kAuto) {
            ctx.lambda = 1.0 / (eps * eps);
          } else if (cfg.lambda_policy == LambdaPolicy::kFixed) {
            ctx.lambda = cfg.lambda_value;
          }
          break;
        }
      }

      std::vector<TrialResult> results(cfg.trials);
#pragma omp parallel for schedule(dynamic)
      for (int64_t trial = 0; trial < static_cast<int64_t>(cfg.trials); ++trial) {
        uint64_t trial_seed = mix64(cfg.seed ^ mix64(static_cast<uint64_t>(mech)));
        trial_seed = mix64(trial_seed ^ std::bit_cast<uint64_t>(eps));
        trial_seed = mix64(trial_seed ^ static_cast<uint64_t>(trial));
        const Dataset data = draw_dataset(truth, cfg.n, trial_seed);
        switch (mech) {
          case Mechanism::kGrr:
            results[trial] = run_trial_grr(ctx, cfg, truth, data, trial_seed);
            break;
          case Mechanism::kSs:
            results[trial] = run_trial_ss(ctx, cfg, truth, data, trial_seed);
            break;
          case Mechanism::kOue:
            results[trial] = run_trial_oue(ctx, cfg, truth, data, trial_seed);
            break;
          case Mechanism::kMss:
            results[trial] = run_trial_mss(ctx, cfg, truth, data, trial_seed);
            break;
        }
      }

      for (uint32_t trial = 0; trial < cfg.trials; ++trial) {
        ExperimentRecord rec;
        rec.trial = trial;
        rec.mech = mech;
        rec.k = cfg.k;
        rec.eps = eps;
        rec.n = cfg.n;
        rec.dist = cfg.dist.str();
        rec.mse = results[trial].mse;
        rec.bits_per_user = ctx.bits;
        rec.decode_ms = results[trial].decode_ms;
        rec.dra_empirical = results[trial].dra;
        rec.dra_analytic = ctx.dra_analytic;
        rec.kappa = ctx.kappa;
        rec.solver_iters = results[trial].solver_iters;
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.trial);
    out += ',';
    out += to_string(r.mech);
    out += ',';
    out += std::to_string(r.k);
    out += ',';
    out += fmt_double(r.eps);
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += r.dist;
    out += ',';
    out += fmt_double(r.mse);
    out += ',';
    out += fmt_double(r.bits_per_user);
    out += ',';
    out += fmt_double(r.decode_ms);
    out += ',';
    out += fmt_double(r.dra_empirical);
    out += ',';
    out += fmt_double(r.dra_analytic);
    out += ',';
    out += fmt_double(r.kappa);
    out += ',';
    out += std::to_string(r.solver_iters);
    out += '\n';
  }
  return out;
}

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("emit_csv: cannot open " + path);
  out << records_to_csv(records);
  if (!out) throw IoError("emit_csv: write failed for " + path);
}

std::vector<ExperimentRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("parse_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw IoError("parse_csv: bad header in " + path);
  }
  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 13) throw IoError("parse_csv: bad row in " + path);
    ExperimentRecord r;
    r.trial = static_cast<uint32_t>(std::stoul(cells[0]));
    r.mech = mechanism_from_string(cells[1]);
    r.k = std::stoull(cells[2]);
    r.eps = std::stod(cells[3]);
    r.n = std::stoull(cells[4]);
    r.dist = cells[5];
    r.mse = std::stod(cells[6]);
    r.bits_per_user = std::stod(cells[7]);
    r.decode_ms = std::stod(cells[8]);
    r.dra_empirical = std::stod(cells[9]);
    r.dra_analytic = std::stod(cells[10]);
    r.kappa = std::stod(cells[11]);
    r.solver_iters = std::stoll(cells[12]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace mss
