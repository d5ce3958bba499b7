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

#ifndef MSS_BENCH_HPP_
#define MSS_BENCH_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mss/core.hpp"
#include "mss/decoder.hpp"
#include "mss/mechanisms.hpp"
#include "mss/moduli.hpp"

namespace mss {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Dist { kUniform, kZipf, kSpike };

struct DistSpec {
  Dist dist = Dist::kZipf;
  double s = 3.0;  // Zipf exponent

  // Accepts "uniform", "spike", "zipf:<s>" (or bare "zipf" for s = 3).
  static DistSpec parse(const std::string& text);
  std::string str() const;
};

// f_v proportional to (v+1)^{-s}, normalized.
Histogram gen_zipf(uint64_t k, double s);
// Point mass at 0.
Histogram gen_spike(uint64_t k);
Histogram gen_uniform(uint64_t k);
Histogram make_histogram(const DistSpec& spec, uint64_t k);

// n i.i.d. draws by inverse CDF; per-index derived streams make the result
// independent of the sampling order.
Dataset draw_dataset(const Histogram& f, uint64_t n, uint64_t seed);
// Spec'd convenience form drawing sequentially from one stream.
Dataset draw_dataset(const Histogram& f, uint64_t n, Rng& rng);

enum class LambdaPolicy { kAuto, kZero, kFixed };  // auto = 1/eps^2 for MSS

struct ExperimentConfig {
  std::vector<Mechanism> mechs;
  uint64_t k = 1024;
  uint64_t n = 10000;
  std::vector<double> eps_grid;
  DistSpec dist;
  uint32_t trials = 1;
  uint64_t seed = 0;
  LambdaPolicy lambda_policy = LambdaPolicy::kAuto;
  double lambda_value = 0.0;
  std::string moduli_cache;  // empty disables the sidecar cache
  ModuliSearchConfig search;
  bool measure_dra = true;
  // Wall-clock decode timing is off by default so that fixed-seed runs are
  // byte-identical; enable explicitly when timings are wanted.
  bool timing = false;
  bool project = false;  // clamp-to-zero + renormalize post-processing

  void check() const;
};

struct ExperimentRecord {
  uint32_t trial = 0;
  Mechanism mech = Mechanism::kGrr;
  uint64_t k = 0;
  double eps = 0.0;
  uint64_t n = 0;
  std::string dist;
  double mse = 0.0;
  double bits_per_user = 0.0;
  double decode_ms = 0.0;
  double dra_empirical = 0.0;
  double dra_analytic = 0.0;
  double kappa = 0.0;
  int64_t solver_iters = 0;
};

// Runs every (mechanism, eps, trial) cell; trials are parallelized with
// per-cell derived seeds, and records are emitted in (mech, eps, trial)
// order regardless of scheduling.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg);

// Serial reference for the per-trial user loop (perturb + aggregate);
// returns the same counts as the parallel path bit for bit.
BlockCounts perturb_and_aggregate_serial(const Dataset& data, const ModuliSet& ms, uint64_t seed);
BlockCounts perturb_and_aggregate(const Dataset& data, const ModuliSet& ms, uint64_t seed);

inline constexpr const char* kCsvHeader =
    "trial,mech,k,eps,n,dist,mse,bits_per_user,decode_ms,dra_empirical,dra_analytic,kappa,"
    "solver_iters";

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
std::string records_to_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> parse_csv(const std::string& path);

// Self-contained SVG line chart; one polyline per group, log-y when every
// value is positive and the range spans more than 50x. x_field is "eps";
// y_field is one of mse, bits_per_user, decode_ms, dra_empirical,
// dra_analytic, kappa; group_field is "mech".
void emit_svg(const std::vector<ExperimentRecord>& records, const std::string& path,
              const std::string& x_field, const std::string& y_field,
              const std::string& group_field);

}  // namespace mss

#endif  // MSS_BENCH_HPP_
