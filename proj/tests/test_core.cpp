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

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>

using namespace mss;

TEST_CASE("ss_params matches hand-computed values") {
  // m=15, e^eps=4: omega=3, p=12/24, q=60/336.
  const double eps = std::log(4.0);
  auto bp = ss_params(15, eps);
  CHECK(bp.omega == 3);
  CHECK(bp.p == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bp.q == doctest::Approx(60.0 / 336.0).epsilon(1e-12));

  auto bp5 = ss_params(5, eps);
  CHECK(bp5.omega == 1);
  CHECK(bp5.p == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ss_params clamps omega at extreme privacy budgets") {
  auto hi = ss_params(2, 50.0);  // e^eps huge -> omega rounds to 0, clamps to 1
  CHECK(hi.omega == 1);
  CHECK(hi.p > 1.0 - 1e-12);
  CHECK(hi.q < 1e-12);

  auto lo = ss_params(4, 1e-9);  // e^eps ~ 1 -> omega rounds to 2 = m/2
  CHECK(lo.omega == 2);
  CHECK(lo.p > lo.q);
}

TEST_CASE("ss_params q reconstruction identity") {
  for (uint32_t m : {3u, 7u, 64u, 1021u}) {
    for (double eps : {0.5, 1.0, 3.0}) {
      const auto bp = ss_params(m, eps);
      const double ee = std::exp(eps);
      const double w = bp.omega;
      const double q = (w * ee * (w - 1.0) + (m - w) * w) / ((m - 1.0) * (w * ee + m - w));
      CHECK(std::abs(q - bp.q) < 1e-12);
      CHECK(std::abs(bp.pi - (bp.q + (bp.p - bp.q) / m)) < 1e-12);
      // Marginal inclusion of a non-true residue equals q.
      CHECK(std::abs((w - bp.p) / (m - 1.0) - bp.q) < 1e-12);
    }
  }
}

TEST_CASE("validate_moduli identifies the failing condition") {
  CHECK(validate_moduli({3, 5}, 15) == ModuliCheck::kRankFailure);   // 2+4 < 15
  CHECK(validate_moduli({2, 4}, 8) == ModuliCheck::kCoprimalityFailure);
  CHECK(validate_moduli({7, 11, 13}, 100) == ModuliCheck::kRankFailure);  // 28 < 100
  CHECK(validate_moduli({3, 5}, 16) == ModuliCheck::kCoverageFailure);    // 15 < 16
  CHECK(validate_moduli({31, 37}, 64) == ModuliCheck::kOk);
  CHECK_THROWS_AS(validate_moduli({}, 4), std::invalid_argument);
  CHECK_THROWS_AS(validate_moduli({1, 3}, 2), std::invalid_argument);
}

TEST_CASE("rns_encode computes residues") {
  auto ms = make_moduli_set({3, 5}, 8, 1.0);
  CHECK(rns_encode(7, ms) == std::vector<uint32_t>{1, 2});
  CHECK(rns_encode(0, ms) == std::vector<uint32_t>{0, 0});
  CHECK_THROWS_AS(rns_encode(8, ms), std::invalid_argument);
}

TEST_CASE("rns_encode is injective on valid moduli sets") {
  // Exhaustive pairwise check at k <= 1000.
  auto ms = make_moduli_set({61, 421, 431}, 900, 1.0);
  std::vector<std::vector<uint32_t>> codes;
  for (uint64_t x = 0; x < 900; ++x) codes.push_back(rns_encode(x, ms));
  int collisions = 0;
  for (uint64_t x = 0; x < 900; ++x) {
    for (uint64_t y = x + 1; y < 900; ++y) collisions += codes[x] == codes[y];
  }
  CHECK(collisions == 0);

  // Distinct-key check at k = 10^4.
  auto big = make_moduli_set({2003, 2011, 3001, 3019}, 10000, 1.0);
  std::set<uint64_t> keys;
  for (uint64_t x = 0; x < 10000; ++x) {
    const auto r = rns_encode(x, big);
    keys.insert(((static_cast<uint64_t>(r[0]) * 2011 + r[1]) * 3001 + r[2]) * 3019 + r[3]);
  }
  CHECK(keys.size() == 10000);
}

TEST_CASE("make_moduli_set accepts covering sets, rejects broken ones") {
  CHECK(make_moduli_set({13}, 13, 1.0).ell() == 1);  // m = k: SS degenerate case
  CHECK(make_moduli_set({3, 5}, 15, 1.0).ell() == 2);  // rank-deficient but encodable
  CHECK_THROWS_AS(make_moduli_set({3, 5}, 16, 1.0), std::invalid_argument);  // coverage
  CHECK_THROWS_AS(make_moduli_set({2, 4}, 8, 1.0), std::invalid_argument);   // coprimality
}

TEST_CASE("histogram validation and projection") {
  Histogram good{{0.25, 0.75}};
  check_distribution(good);
  Histogram bad{{0.5, 0.6}};
  CHECK_THROWS_AS(check_distribution(bad), std::invalid_argument);

  Histogram est{{-0.1, 0.6, 0.5}};
  const auto proj = clamp_renormalize(est);
  CHECK(proj.f[0] == 0.0);
  CHECK(proj.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dataset bounds are enforced") {
  Dataset d{4, {0, 1, 3}};
  check_dataset(d);
  Dataset bad{4, {0, 4}};
  CHECK_THROWS_AS(check_dataset(bad), std::invalid_argument);
}
