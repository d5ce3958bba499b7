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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mss/bench.hpp"

using namespace mss;

namespace {

double three_sigma(double p, uint64_t n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

}  // namespace

TEST_CASE("grr_perturb limits and frequencies") {
  Rng rng = Rng::derive(1, {0});
  for (int i = 0; i < 50; ++i) CHECK(grr_perturb(3, 8, 40.0, rng) == 3);  // eps -> inf

  // eps = 0-ish with k=2: both outputs equally likely.
  const int n = 200000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += grr_perturb(0, 2, 1e-12, rng);
  CHECK(std::abs(ones / static_cast<double>(n) - 0.5) < three_sigma(0.5, n));

  // k=4, e^eps=3: P[out = x] = 0.5.
  const double eps = std::log(3.0);
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += grr_perturb(2, 4, eps, rng) == 2;
  CHECK(std::abs(hits / static_cast<double>(n) - 0.5) < three_sigma(0.5, n));
}

TEST_CASE("ss_perturb honors the size contract and inclusion rates") {
  const double eps = std::log(4.0);
  Rng rng = Rng::derive(2, {0});

  // omega = m-1 edge (m = 2 is the only block size where rounding reaches it).
  auto bp = ss_params(2, 0.1);
  REQUIRE(bp.omega == 1);
  for (int i = 0; i < 50; ++i) {
    CHECK(ss_perturb_block(1, bp, rng).size() == bp.omega);
  }

  // k=5, e^eps=4: omega=1, P[x in Z] = 0.5.
  const int n = 200000;
  int with_x = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = ss_perturb(2, 5, eps, rng);
    REQUIRE(z.size() == 1);
    with_x += z[0] == 2;
  }
  CHECK(std::abs(with_x / static_cast<double>(n) - 0.5) < three_sigma(0.5, n));

  // Point-mass data: marginal P[a in Z] = q for a != x.
  auto bp15 = ss_params(15, eps);
  int with_a = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = ss_perturb_block(0, bp15, rng);
    REQUIRE(z.size() == bp15.omega);
    with_a += std::binary_search(z.begin(), z.end(), 7u);
  }
  CHECK(std::abs(with_a / static_cast<double>(n) - bp15.q) < three_sigma(bp15.q, n));
}

TEST_CASE("mss_perturb block choice is uniform and residue inclusion matches p_j") {
  const double eps = std::log(4.0);
  auto ms = make_moduli_set({3, 5}, 7, eps);
  Rng rng = Rng::derive(3, {0});
  const int n = 200000;
  int block0 = 0, true_in[2] = {0, 0}, count[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    const auto rep = mss_perturb(5, ms, rng);  // residues (2, 0)
    block0 += rep.block == 0;
    ++count[rep.block];
    const uint32_t r = 5 % ms.moduli[rep.block];
    true_in[rep.block] += std::binary_search(rep.subset.begin(), rep.subset.end(), r);
  }
  CHECK(std::abs(block0 / static_cast<double>(n) - 0.5) < three_sigma(0.5, n));
  for (int j = 0; j < 2; ++j) {
    const double rate = static_cast<double>(true_in[j]) / count[j];
    CHECK(std::abs(rate - ms.blocks[j].p) < three_sigma(ms.blocks[j].p, count[j]));
  }
}

TEST_CASE("mss with a single block reduces to plain SS (exact pmf comparison)") {
  const double eps = 1.3;
  auto ms = make_moduli_set({7}, 7, eps);
  ReportSpace mss_space(MechanismKind::mss(ms));
  ReportSpace ss_space(MechanismKind::ss(7, eps));
  REQUIRE(mss_space.size() == ss_space.size());
  for (uint32_t x = 0; x < 7; ++x) {
    const auto a = mss_space.pmf(x);
    const auto b = ss_space.pmf(x);
    double tv = 0.0;
    for (size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
    CHECK(tv < 1e-12);
  }
}

TEST_CASE("oue_perturb bit expectations") {
  Rng rng = Rng::derive(4, {0});
  // eps -> inf: expected vector = one-hot/2 at x.
  int set_other = 0, set_x = 0;
  for (int i = 0; i < 4000; ++i) {
    const auto bits = oue_perturb(1, 4, 40.0, rng);
    set_x += bits[1];
    set_other += bits[0] + bits[2] + bits[3];
  }
  CHECK(set_other == 0);
  CHECK(std::abs(set_x / 4000.0 - 0.5) < three_sigma(0.5, 4000));

  // k=2, e^eps=3: E[bit_{!x}] = 0.25.
  const int n = 200000;
  int other = 0;
  for (int i = 0; i < n; ++i) other += oue_perturb(0, 2, std::log(3.0), rng)[1];
  CHECK(std::abs(other / static_cast<double>(n) - 0.25) < three_sigma(0.25, n));
}

TEST_CASE("estimators recover the noiseless limit and the debias zero point") {
  // eps huge: estimate equals the empirical histogram.
  std::vector<uint64_t> counts{5, 3, 2};
  const auto est = grr_estimate(counts, 40.0, 10);
  CHECK(est.f[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(est.f[1] == doctest::Approx(0.3).epsilon(1e-9));

  // ybar = q exactly -> estimate 0.
  const double eps = std::log(4.0);
  const auto bp = ss_params(10, eps);
  std::vector<uint64_t> member(10, 0);
  const uint64_t n = 1000000;
  member[3] = static_cast<uint64_t>(std::llround(bp.q * n));
  const auto zero = ss_estimate(member, eps, n);
  // Tolerance covers the count rounding: 0.5/n/(p-q).
  CHECK(std::abs(zero.f[3]) < 2e-6);

  CHECK_THROWS_AS(grr_estimate(counts, 1.0, 0), std::invalid_argument);
}

TEST_CASE("grr estimate sums to one exactly; ss/oue in expectation") {
  Rng rng = Rng::derive(6, {0});
  const uint64_t n = 2000, k = 16;
  const double eps = 1.0;
  std::vector<uint64_t> counts(k, 0);
  for (uint64_t i = 0; i < n; ++i) ++counts[grr_perturb(i % k, k, eps, rng)];
  const auto est = grr_estimate(counts, eps, n);
  CHECK(std::abs(est.sum() - 1.0) < 1e-12);

  // SS/OUE: mean total mass over repeated trials within 3 sigma of 1.
  const int trials = 300;
  double total_ss = 0.0, total_oue = 0.0;
  std::vector<double> sums_ss, sums_oue;
  for (int t = 0; t < trials; ++t) {
    std::vector<uint64_t> member(k, 0), bits(k, 0);
    for (uint64_t i = 0; i < n; ++i) {
      for (uint32_t a : ss_perturb(i % k, k, eps, rng)) ++member[a];
      const auto bv = oue_perturb(i % k, k, eps, rng);
      for (uint64_t a = 0; a < k; ++a) bits[a] += bv[a];
    }
    sums_ss.push_back(ss_estimate(member, eps, n).sum());
    sums_oue.push_back(oue_estimate(bits, eps, n).sum());
    total_ss += sums_ss.back();
    total_oue += sums_oue.back();
  }
  const double mean_ss = total_ss / trials, mean_oue = total_oue / trials;
  double var_ss = 0.0, var_oue = 0.0;
  for (int t = 0; t < trials; ++t) {
    var_ss += (sums_ss[t] - mean_ss) * (sums_ss[t] - mean_ss);
    var_oue += (sums_oue[t] - mean_oue) * (sums_oue[t] - mean_oue);
  }
  var_ss /= trials - 1;
  var_oue /= trials - 1;
  CHECK(std::abs(mean_ss - 1.0) < 3.0 * std::sqrt(var_ss / trials) + 1e-9);
  CHECK(std::abs(mean_oue - 1.0) < 3.0 * std::sqrt(var_oue / trials) + 1e-9);
}

TEST_CASE("monte carlo unbiasedness of the baseline estimators") {
  // n=10^4, k=100, Zipf s=3, e^eps=4: mean estimate within 3 standard errors
  // per coordinate for at least 98 of 100 coordinates.
  const uint64_t n = 10000, k = 100;
  const double eps = std::log(4.0);
  const int trials = 200;
  const Histogram f = gen_zipf(k, 3.0);

  std::vector<double> mean(k, 0.0), m2(k, 0.0);
  for (int t = 0; t < trials; ++t) {
    const Dataset data = draw_dataset(f, n, mix64(777 + t));
    std::vector<uint64_t> counts(k, 0);
    Rng rng = Rng::derive(900 + t, {0});
    for (uint32_t x : data.values) ++counts[grr_perturb(x, k, eps, rng)];
    const auto est = grr_estimate(counts, eps, n);
    for (uint64_t v = 0; v < k; ++v) {
      const double delta = est.f[v] - mean[v];
      mean[v] += delta / (t + 1);
      m2[v] += delta * (est.f[v] - mean[v]);
    }
  }
  int ok = 0;
  for (uint64_t v = 0; v < k; ++v) {
    const double se = std::sqrt(m2[v] / (trials - 1) / trials);
    ok += std::abs(mean[v] - f.f[v]) <= 3.0 * se;
  }
  CHECK(ok >= 98);
}

TEST_CASE("report_pmf sums to one and matches GRR closed form") {
  const double eps = std::log(2.0);
  ReportSpace grr(MechanismKind::grr(3, eps));
  const auto pmf = grr.pmf(0);
  CHECK(pmf[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pmf[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pmf[2] == doctest::Approx(0.25).epsilon(1e-12));

  auto ms = make_moduli_set({3, 5}, 7, std::log(4.0));
  ReportSpace mss_space(MechanismKind::mss(ms));
  for (uint32_t x = 0; x < 7; ++x) {
    const auto p = mss_space.pmf(x);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-10);
  }

  ReportSpace oue(MechanismKind::oue(6, eps));
  const auto p = oue.pmf(2);
  CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-10);

  CHECK_THROWS_AS(ReportSpace(MechanismKind::ss(13, 1.0)), CapacityError);
}

TEST_CASE("exhaustive pmf ratios satisfy eps-LDP") {
  // This is the Theorem-1 check at unit-test scale; the acceptance suite
  // sweeps the full configurations.
  for (double ee : {1.5, std::exp(1.0), std::exp(2.0)}) {
    const double eps = std::log(ee);
    std::vector<ReportSpace> spaces;
    spaces.emplace_back(MechanismKind::grr(6, eps));
    spaces.emplace_back(MechanismKind::ss(6, eps));
    spaces.emplace_back(MechanismKind::oue(5, eps));
    spaces.emplace_back(MechanismKind::mss(make_moduli_set({3, 5}, 15, eps)));
    uint64_t k_per[] = {6, 6, 5, 15};
    for (size_t s = 0; s < spaces.size(); ++s) {
      double worst = 0.0;
      for (uint32_t x = 0; x < k_per[s]; ++x) {
        const auto px = spaces[s].pmf(x);
        for (uint32_t y = 0; y < k_per[s]; ++y) {
          const auto py = spaces[s].pmf(y);
          for (size_t i = 0; i < px.size(); ++i) {
            if (py[i] > 0.0) worst = std::max(worst, px[i] / py[i]);
          }
        }
      }
      CHECK(worst <= ee * (1.0 + 1e-9));
    }
  }
}
