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

#include "mss/sparse.hpp"

#include <doctest.h>

#include <cmath>

#include "mss/decoder.hpp"
#include "mss/rng.hpp"
#include "oracles.hpp"

using namespace mss;

namespace {

SparseMatrix random_sparse(int64_t rows, int64_t cols, double density, uint64_t seed) {
  Rng rng = Rng::derive(seed, {0x5BA25EULL});
  std::vector<std::tuple<int64_t, int64_t, double>> trip;
  for (int64_t r = 0; r < rows; ++r) {
    bool any = false;
    for (int64_t c = 0; c < cols; ++c) {
      if (rng.next_double() < density) {
        trip.emplace_back(r, c, rng.next_double() * 2.0 - 1.0);
        any = true;
      }
    }
    if (!any) trip.emplace_back(r, rng.below(cols), 1.0);  // keep rows nonempty
  }
  // Nonzero diagonal-ish entries keep random systems comfortably full rank.
  for (int64_t c = 0; c < cols; ++c) trip.emplace_back(c % rows, c, 1.0 + rng.next_double());
  return make_csr(rows, cols, trip);
}

std::vector<double> random_vector(int64_t n, uint64_t seed) {
  Rng rng = Rng::derive(seed, {0x5EC70ULL});
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
  return v;
}

}  // namespace

TEST_CASE("matvec on the identity and a design matrix") {
  const auto eye = identity_matrix(5);
  std::vector<double> x{1, 2, 3, 4, 5}, y(5);
  matvec(eye, x, y);
  CHECK(y == x);

  // Design of (2,3), k=4 applied to the ones vector: residue class sizes.
  auto d = build_design(make_moduli_set({2, 3}, 4, 1.0));
  std::vector<double> ones(4, 1.0), out(5);
  matvec(d.a, ones, out);
  CHECK(out == std::vector<double>{2, 2, 2, 1, 1});
}

TEST_CASE("matvec/rmatvec against the dense oracle, plus the adjoint identity") {
  const auto a = random_sparse(30, 20, 0.3, 17);
  const auto ad = testing::to_dense(a);
  const auto x = random_vector(20, 1);
  const auto y = random_vector(30, 2);

  std::vector<double> ax(30), aty(20);
  matvec(a, x, ax);
  rmatvec(a, y, aty);

  const Eigen::VectorXd ax_o = ad * Eigen::Map<const Eigen::VectorXd>(x.data(), 20);
  const Eigen::VectorXd aty_o = ad.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), 30);
  for (int i = 0; i < 30; ++i) CHECK(ax[i] == doctest::Approx(ax_o(i)).epsilon(1e-12));
  for (int i = 0; i < 20; ++i) CHECK(aty[i] == doctest::Approx(aty_o(i)).epsilon(1e-12));

  // <Ax, y> = <x, A^T y> within 1e-12 relative.
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < 30; ++i) lhs += ax[i] * y[i];
  for (int i = 0; i < 20; ++i) rhs += x[i] * aty[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  CHECK_THROWS_AS(matvec(a, y, ax), std::invalid_argument);
}

TEST_CASE("serial reference kernels agree bitwise with the parallel ones") {
  const auto a = random_sparse(400, 300, 0.05, 23);
  const auto x = random_vector(300, 3);
  const auto y = random_vector(400, 4);
  std::vector<double> y1(400), y2(400), x1(300), x2(300);
  matvec(a, x, y1);
  matvec_serial(a, x, y2);
  rmatvec(a, y, x1);
  rmatvec_serial(a, y, x2);
  CHECK(y1 == y2);
  CHECK(x1 == x2);
}

TEST_CASE("lsmr solves trivial systems") {
  const auto eye = identity_matrix(4);
  std::vector<double> b{3, -1, 2, 0.5};
  const auto rep = lsmr(eye, b);
  for (int i = 0; i < 4; ++i) CHECK(rep.x[i] == doctest::Approx(b[i]).epsilon(1e-10));
  CHECK(rep.stop == StopReason::kAtolBtol);

  // A = [[1],[1]], b = (1,3): x = 2.
  const auto ones = make_csr(2, 1, {{0, 0, 1.0}, {1, 0, 1.0}});
  const auto rep2 = lsmr(ones, std::vector<double>{1, 3});
  CHECK(rep2.x[0] == doctest::Approx(2.0).epsilon(1e-10));

  // b = 0 -> x = 0 immediately.
  const auto rep3 = lsmr(eye, std::vector<double>{0, 0, 0, 0});
  CHECK(rep3.iterations == 0);
  for (double v : rep3.x) CHECK(v == 0.0);
}

TEST_CASE("lsmr matches the dense ridge oracle on random systems") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
    const auto a = random_sparse(50, 20, 0.25, seed);
    const auto ad = testing::to_dense(a);
    const auto b = random_vector(50, seed + 100);
    for (double lambda : {0.0, 0.1}) {
      LsmrOptions opt;
      opt.damp = std::sqrt(lambda);
      const auto rep = lsmr(a, b, opt);
      const auto oracle = testing::dense_ridge_solve(ad, b, lambda);
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 20; ++i) {
        num += (rep.x[i] - oracle[i]) * (rep.x[i] - oracle[i]);
        den += oracle[i] * oracle[i];
      }
      CHECK(std::sqrt(num / den) < 1e-6);
    }
  }
}

TEST_CASE("lsmr normal-equation residual is monotone along the iterations") {
  const auto a = random_sparse(60, 25, 0.2, 77);
  const auto b = random_vector(60, 5);
  std::vector<double> atr_norms;
  for (int64_t iters = 1; iters <= 25; ++iters) {
    LsmrOptions opt;
    opt.maxiter = iters;
    opt.atol = 0.0;
    opt.btol = 0.0;
    const auto rep = lsmr(a, b, opt);
    // Recompute ||A^T (b - A x_r)|| from scratch.
    std::vector<double> ax(60), atr(25);
    matvec(a, rep.x, ax);
    for (int i = 0; i < 60; ++i) ax[i] = b[i] - ax[i];
    rmatvec(a, ax, atr);
    double nrm = 0.0;
    for (double v : atr) nrm += v * v;
    atr_norms.push_back(std::sqrt(nrm));
  }
  for (size_t i = 1; i < atr_norms.size(); ++i) {
    CHECK(atr_norms[i] <= atr_norms[i - 1] + 1e-10 * atr_norms[0] + 1e-10);
  }
}

TEST_CASE("ridge solutions converge to the lambda=0 solution") {
  const auto a = random_sparse(40, 15, 0.3, 99);
  const auto b = random_vector(40, 6);
  const auto base = lsmr(a, b);
  double prev_gap = 1e300;
  std::vector<double> gaps;
  for (double lambda : {1.0, 0.1, 0.01, 0.001}) {
    LsmrOptions opt;
    opt.damp = std::sqrt(lambda);
    const auto rep = lsmr(a, b, opt);
    double gap = 0.0;
    for (int i = 0; i < 15; ++i) gap += (rep.x[i] - base.x[i]) * (rep.x[i] - base.x[i]);
    gap = std::sqrt(gap);
    CHECK(gap < prev_gap + 1e-12);
    prev_gap = gap;
    gaps.push_back(gap);
  }
  // Bias is O(lambda): each 10x drop in lambda shrinks the gap by ~10x.
  CHECK(gaps.back() < 0.5 * gaps[gaps.size() - 2]);
  double base_norm = 0.0;
  for (double v : base.x) base_norm += v * v;
  CHECK(gaps.back() < 0.01 * std::sqrt(base_norm));
}

TEST_CASE("lsmr reports maxiter exhaustion") {
  const auto a = random_sparse(50, 30, 0.2, 41);
  const auto b = random_vector(50, 7);
  LsmrOptions opt;
  opt.maxiter = 2;
  opt.atol = 1e-15;
  opt.btol = 1e-15;
  const auto rep = lsmr(a, b, opt);
  CHECK(rep.stop == StopReason::kMaxIter);
  CHECK(rep.iterations == 2);
}

TEST_CASE("extreme singular values on closed-form matrices") {
  const auto diag = make_csr(2, 2, {{0, 0, 3.0}, {1, 1, 1.0}});
  const auto est = extreme_singular_values(diag);
  CHECK(est.sigma_max == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(est.sigma_min == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cond(diag) == doctest::Approx(3.0).epsilon(1e-8));

  // Orthonormal columns: kappa = 1. Use a 2D rotation embedded in 3 rows.
  const double c = std::cos(0.7), s = std::sin(0.7);
  const auto rot = make_csr(3, 2, {{0, 0, c}, {0, 1, -s}, {1, 0, s}, {1, 1, c}, {2, 0, 0.0}});
  CHECK(cond(rot) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("extreme singular values match the dense SVD oracle on designs") {
  // Valid design: (7,11,13,17), k=40.
  auto ms = make_moduli_set({7, 11, 13, 17}, 40, 1.0);
  auto d = build_design(ms);
  std::vector<double> planning(ms.ell(), 1.0);
  apply_weights(d, std::span<const double>(planning));
  const auto est = extreme_singular_values(d.a);
  const auto oracle = testing::dense_svd_extremes(testing::to_dense(d.a));
  CHECK(std::abs(est.sigma_max - oracle.sigma_max) < 0.02 * oracle.sigma_max);
  CHECK(std::abs(est.sigma_min - oracle.sigma_min) < 0.02 * oracle.sigma_min);

  // Random rectangular matrices.
  for (uint64_t seed : {11ULL, 12ULL}) {
    const auto a = random_sparse(80, 35, 0.15, seed);
    const auto e2 = extreme_singular_values(a);
    const auto o2 = testing::dense_svd_extremes(testing::to_dense(a));
    CHECK(std::abs(e2.sigma_max - o2.sigma_max) < 0.02 * o2.sigma_max);
    CHECK(std::abs(e2.sigma_min - o2.sigma_min) < 0.02 * o2.sigma_min);
  }
}

TEST_CASE("rank-deficient designs are flagged") {
  // (3,5,7) covers k=50 but the rank sum 12 < 50: sigma_min = 0.
  auto ms = ModuliSet{};
  ms.moduli = {3, 5, 7};
  ms.k = 50;
  ms.eps = 1.0;
  for (uint32_t m : ms.moduli) ms.blocks.push_back(ss_params(m, 1.0));
  auto d = build_design(ms);
  const auto est = extreme_singular_values(d.a);
  CHECK(est.rank_deficient);
  CHECK(cond(d.a) == std::numeric_limits<double>::infinity());
  const auto oracle = testing::dense_svd_extremes(testing::to_dense(d.a));
  CHECK(std::abs(est.sigma_max - oracle.sigma_max) < 0.02 * oracle.sigma_max);
  CHECK(oracle.sigma_min < 1e-10 * oracle.sigma_max);
}

TEST_CASE("tridiagonal eigenvalues match the dense oracle") {
  std::vector<double> d{2.0, -1.0, 3.5, 0.25, 1.0};
  std::vector<double> e{0.5, 1.5, -0.75, 2.0};
  const auto eig = tridiag_eigenvalues(d, e);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) m(i, i) = d[i];
  for (int i = 0; i < 4; ++i) m(i, i + 1) = m(i + 1, i) = e[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  for (int i = 0; i < 5; ++i) CHECK(eig[i] == doctest::Approx(es.eigenvalues()(i)).epsilon(1e-10));
}
