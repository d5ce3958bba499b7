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

#ifndef MSS_SPARSE_HPP_
#define MSS_SPARSE_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mss {

// Immutable-after-finalize CSR matrix. A column-major copy of the structure
// is kept so that transpose products accumulate per output entry in a fixed
// order; results are then independent of the OpenMP thread count.
struct SparseMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> row_ptr;  // rows + 1
  std::vector<int32_t> col_idx;  // nnz
  std::vector<double> val;       // nnz

  // Transposed layout, built by finalize().
  std::vector<int64_t> col_ptr;  // cols + 1
  std::vector<int32_t> row_idx;  // nnz
  std::vector<double> val_t;     // nnz

  int64_t nnz() const { return static_cast<int64_t>(col_idx.size()); }

  // Validates structure and builds the transposed layout.
  void finalize();
};

SparseMatrix make_csr(int64_t rows, int64_t cols,
                      const std::vector<std::tuple<int64_t, int64_t, double>>& triplets);
SparseMatrix identity_matrix(int64_t n);

// y = A x (OpenMP over rows; deterministic for any thread count).
void matvec(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
// Serial reference with identical accumulation order.
void matvec_serial(const SparseMatrix& a, std::span<const double> x, std::span<double> y);

// x = A^T y (OpenMP over columns via the transposed layout).
void rmatvec(const SparseMatrix& a, std::span<const double> y, std::span<double> x);
void rmatvec_serial(const SparseMatrix& a, std::span<const double> y, std::span<double> x);

enum class StopReason {
  kAtolBtol,         // converged within atol/btol
  kConditionLimit,   // condition estimate exceeded conlim
  kMaxIter,          // iteration budget exhausted
};

const char* to_string(StopReason r);

struct LsmrOptions {
  double damp = 0.0;    // minimizes ||Ax-b||^2 + damp^2 ||x||^2
  double atol = 1e-10;
  double btol = 1e-10;
  double conlim = 0.0;  // 0 disables the condition-number stop
  int64_t maxiter = 0;  // 0 selects 4 * cols
};

struct SolverReport {
  std::vector<double> x;
  int64_t iterations = 0;
  double residual_norm = 0.0;         // ||b - Ax|| (damped system)
  double normal_residual_norm = 0.0;  // ||A^T (b - Ax)||
  double condition_estimate = 0.0;
  StopReason stop = StopReason::kAtolBtol;
};

// Sparse damped least squares via Golub-Kahan bidiagonalization (LSMR).
SolverReport lsmr(const SparseMatrix& a, std::span<const double> b, const LsmrOptions& opt = {});

// Conjugate gradient on the normal equations (A^T A + shift I) z = rhs.
// Returns false if rel_tol was not reached within maxiter.
bool normal_cg(const SparseMatrix& a, std::span<const double> rhs, double shift, double rel_tol,
               int64_t maxiter, std::vector<double>& z);

struct SingularEstimate {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  bool rank_deficient = false;  // sigma_min below 1e-12 * sigma_max, or solves stalled
  int64_t iterations = 0;
};

// Extreme singular values via Lanczos: Golub-Kahan bidiagonalization with
// full reorthogonalization for sigma_max, and a shift-inverted Lanczos pass
// (inner CG solves on the Gram operator) for sigma_min. budget = 0 selects
// min(2 * cols, 500) bidiagonalization steps. cg_cap = 0 selects the
// default inner budget (4 * cols + 100); a tighter cap turns very
// ill-conditioned inputs into a fast rank-deficient signal.
SingularEstimate extreme_singular_values(const SparseMatrix& a, int64_t budget = 0,
                                         int64_t cg_cap = 0);

// sigma_max / sigma_min; +inf when rank-deficient.
double cond(const SparseMatrix& a);

// Eigenvalues (ascending) of a symmetric tridiagonal matrix with diagonal d
// and off-diagonal e (size d.size() - 1); QL with implicit shifts.
std::vector<double> tridiag_eigenvalues(std::vector<double> d, std::vector<double> e);

}  // namespace mss

#endif  // MSS_SPARSE_HPP_
