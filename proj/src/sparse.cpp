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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "mss/rng.hpp"

namespace mss {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void scal(std::span<double> a, double c) {
  for (double& v : a) v *= c;
}

// Givens rotation (c, s, r) with r = hypot(a, b); SciPy's _sym_ortho.
void sym_ortho(double a, double b, double& c, double& s, double& r) {
  if (b == 0.0) {
    c = (a == 0.0) ? 1.0 : std::copysign(1.0, a);
    s = 0.0;
    r = std::abs(a);
  } else if (a == 0.0) {
    c = 0.0;
    s = std::copysign(1.0, b);
    r = std::abs(b);
  } else if (std::abs(b) > std::abs(a)) {
    const double tau = a / b;
    s = std::copysign(1.0, b) / std::sqrt(1.0 + tau * tau);
    c = s * tau;
    r = b / s;
  } else {
    const double tau = b / a;
    c = std::copysign(1.0, a) / std::sqrt(1.0 + tau * tau);
    s = c * tau;
    r = a / c;
  }
}

}  // namespace

void SparseMatrix::finalize() {
  if (rows < 0 || cols < 0) throw std::invalid_argument("sparse: negative dimensions");
  if (static_cast<int64_t>(row_ptr.size()) != rows + 1) {
    throw std::invalid_argument("sparse: row_ptr size mismatch");
  }
  if (row_ptr.front() != 0 || row_ptr.back() != nnz()) {
    throw std::invalid_argument("sparse: row_ptr endpoints");
  }
  for (int64_t i = 0; i < rows; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) throw std::invalid_argument("sparse: row_ptr not monotone");
  }
  for (size_t t = 0; t < col_idx.size(); ++t) {
    if (col_idx[t] < 0 || col_idx[t] >= cols) throw std::invalid_argument("sparse: column index");
    if (!std::isfinite(val[t])) throw std::invalid_argument("sparse: non-finite value");
  }

  col_ptr.assign(cols + 1, 0);
  row_idx.resize(col_idx.size());
  val_t.resize(val.size());
  for (int32_t c : col_idx) ++col_ptr[c + 1];
  for (int64_t c = 0; c < cols; ++c) col_ptr[c + 1] += col_ptr[c];
  std::vector<int64_t> fill(col_ptr.begin(), col_ptr.end() - 1);
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t t = row_ptr[i]; t < row_ptr[i + 1]; ++t) {
      const int64_t dst = fill[col_idx[t]]++;
      row_idx[dst] = static_cast<int32_t>(i);
      val_t[dst] = val[t];
    }
  }
}

SparseMatrix make_csr(int64_t rows, int64_t cols,
                      const std::vector<std::tuple<int64_t, int64_t, double>>& triplets) {
  SparseMatrix a;
  a.rows = rows;
  a.cols = cols;
  auto sorted = triplets;
  std::sort(sorted.begin(), sorted.end());
  a.row_ptr.assign(rows + 1, 0);
  a.col_idx.reserve(sorted.size());
  a.val.reserve(sorted.size());
  for (const auto& [r, c, v] : sorted) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw std::invalid_argument("make_csr: index out of range");
    }
    ++a.row_ptr[r + 1];
    a.col_idx.push_back(static_cast<int32_t>(c));
    a.val.push_back(v);
  }
  for (int64_t i = 0; i < rows; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
  a.finalize();
  return a;
}

SparseMatrix identity_matrix(int64_t n) {
  std::vector<std::tuple<int64_t, int64_t, double>> t;
  t.reserve(n);
  for (int64_t i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  return make_csr(n, n, t);
}

void matvec(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (static_cast<int64_t>(x.size()) != a.cols || static_cast<int64_t>(y.size()) != a.rows) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
#pragma omp parallel for schedule(static) if (a.nnz() > 16384)
  for (int64_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int64_t t = a.row_ptr[i]; t < a.row_ptr[i + 1]; ++t) s += a.val[t] * x[a.col_idx[t]];
    y[i] = s;
  }
}

void matvec_serial(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (static_cast<int64_t>(x.size()) != a.cols || static_cast<int64_t>(y.size()) != a.rows) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
  for (int64_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int64_t t = a.row_ptr[i]; t < a.row_ptr[i + 1]; ++t) s += a.val[t] * x[a.col_idx[t]];
    y[i] = s;
  }
}

void rmatvec(const SparseMatrix& a, std::span<const double> y, std::span<double> x) {
  if (static_cast<int64_t>(y.size()) != a.rows || static_cast<int64_t>(x.size()) != a.cols) {
    throw std::invalid_argument("rmatvec: dimension mismatch");
  }
#pragma omp parallel for schedule(static) if (a.nnz() > 16384)
  for (int64_t c = 0; c < a.cols; ++c) {
    double s = 0.0;
    for (int64_t t = a.col_ptr[c]; t < a.col_ptr[c + 1]; ++t) s += a.val_t[t] * y[a.row_idx[t]];
    x[c] = s;
  }
}

void rmatvec_serial(const SparseMatrix& a, std::span<const double> y, std::span<double> x) {
  if (static_cast<int64_t>(y.size()) != a.rows || static_cast<int64_t>(x.size()) != a.cols) {
    throw std::invalid_argument("rmatvec: dimension mismatch");
  }
  for (int64_t c = 0; c < a.cols; ++c) {
    double s = 0.0;
    for (int64_t t = a.col_ptr[c]; t < a.col_ptr[c + 1]; ++t) s += a.val_t[t] * y[a.row_idx[t]];
    x[c] = s;
  }
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kAtolBtol: return "atol/btol";
    case StopReason::kConditionLimit: return "condition-limit";
    case StopReason::kMaxIter: return "maxiter";
  }
  return "unknown";
}

SolverReport lsmr(const SparseMatrix& a, std::span<const double> b, const LsmrOptions& opt) {
  if (static_cast<int64_t>(b.size()) != a.rows) throw std::invalid_argument("lsmr: b size");
  if (a.nnz() == 0) throw std::invalid_argument("lsmr: A is zero");
  const int64_t n = a.cols;
  const int64_t maxiter = opt.maxiter > 0 ? opt.maxiter : 4 * n;
  const double ctol = opt.conlim > 0.0 ? 1.0 / opt.conlim : 0.0;
  const double damp = opt.damp;

  SolverReport rep;
  rep.x.assign(n, 0.0);

  std::vector<double> u(b.begin(), b.end());
  std::vector<double> v(n, 0.0);
  const double normb = norm2(u);
  double beta = normb;
  double alpha = 0.0;
  if (beta > 0.0) {
    scal(u, 1.0 / beta);
    rmatvec(a, u, v);
    alpha = norm2(v);
    if (alpha > 0.0) scal(v, 1.0 / alpha);
  }

  double zetabar = alpha * beta;
  if (zetabar == 0.0) {
    // b = 0 or A^T b = 0: the least-squares solution is x = 0.
    return rep;
  }

  double alphabar = alpha;
  double rho = 1.0, rhobar = 1.0, cbar = 1.0, sbar = 0.0;
  std::vector<double> h = v;
  std::vector<double> hbar(n, 0.0);

  // Residual-norm bookkeeping (Fong & Saunders).
  double betadd = beta, betad = 0.0;
  double rhodold = 1.0, tautildeold = 0.0, thetatilde = 0.0, zeta = 0.0, d = 0.0;
  double norma2 = alpha * alpha;
  double maxrbar = 0.0, minrbar = 1e+100;

  std::vector<double> tmp_m(a.rows, 0.0);
  std::vector<double> tmp_n(n, 0.0);

  int istop = 0;
  int64_t itn = 0;
  double normr = beta, normar = alpha * beta, conda = 1.0;

  while (itn < maxiter) {
    ++itn;

    matvec(a, v, tmp_m);
    for (int64_t i = 0; i < a.rows; ++i) u[i] = tmp_m[i] - alpha * u[i];
    beta = norm2(u);
    if (beta > 0.0) {
      scal(u, 1.0 / beta);
      rmatvec(a, u, tmp_n);
      for (int64_t i = 0; i < n; ++i) v[i] = tmp_n[i] - beta * v[i];
      alpha = norm2(v);
      if (alpha > 0.0) scal(v, 1.0 / alpha);
    }

    double chat, shat, alphahat;
    sym_ortho(alphabar, damp, chat, shat, alphahat);

    const double rhoold = rho;
    double c, s;
    sym_ortho(alphahat, beta, c, s, rho);
    const double thetanew = s * alpha;
    alphabar = c * alpha;

    const double rhobarold = rhobar;
    const double zetaold = zeta;
    const double thetabar = sbar * rho;
    const double rhotemp = cbar * rho;
    sym_ortho(cbar * rho, thetanew, cbar, sbar, rhobar);
    zeta = cbar * zetabar;
    zetabar = -sbar * zetabar;

    const double hb = thetabar * rho / (rhoold * rhobarold);
    const double xs = zeta / (rho * rhobar);
    const double hs = thetanew / rho;
#pragma omp parallel for schedule(static) if (n > 65536)
    for (int64_t i = 0; i < n; ++i) {
      hbar[i] = h[i] - hb * hbar[i];
      rep.x[i] += xs * hbar[i];
      h[i] = v[i] - hs * h[i];
    }

    const double betaacute = chat * betadd;
    const double betacheck = -shat * betadd;
    const double betahat = c * betaacute;
    betadd = -s * betaacute;

    const double thetatildeold = thetatilde;
    double ctildeold, stildeold, rhotildeold;
    sym_ortho(rhodold, thetabar, ctildeold, stildeold, rhotildeold);
    thetatilde = stildeold * rhobar;
    rhodold = ctildeold * rhobar;
    betad = -stildeold * betad + ctildeold * betahat;

    tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold;
    const double taud = (zeta - thetatilde * tautildeold) / rhodold;
    d += betacheck * betacheck;
    normr = std::sqrt(d + (betad - taud) * (betad - taud) + betadd * betadd);

    norma2 += beta * beta;
    const double norma = std::sqrt(norma2);
    norma2 += alpha * alpha;

    maxrbar = std::max(maxrbar, rhobarold);
    if (itn > 1) minrbar = std::min(minrbar, rhobarold);
    conda = std::max(maxrbar, rhotemp) / std::min(minrbar, rhotemp);
    normar = std::abs(zetabar);
    const double normx = norm2(rep.x);

    const double test1 = normr / normb;
    const double test2 = (norma * normr > 0.0) ? normar / (norma * normr)
                                               : std::numeric_limits<double>::infinity();
    const double test3 = 1.0 / conda;
    const double t1 = test1 / (1.0 + norma * normx / normb);
    const double rtol = opt.btol + opt.atol * norma * normx / normb;

    if (itn >= maxiter) istop = 7;
    if (1.0 + test3 <= 1.0) istop = 6;
    if (1.0 + test2 <= 1.0) istop = 5;
    if (1.0 + t1 <= 1.0) istop = 4;
    if (ctol > 0.0 && test3 <= ctol) istop = 3;
    if (test2 <= opt.atol) istop = 2;
    if (test1 <= rtol) istop = 1;
    if (istop != 0) break;
  }

  rep.iterations = itn;
  rep.residual_norm = normr;
  rep.normal_residual_norm = normar;
  rep.condition_estimate = conda;
  if (istop == 7) {
    rep.stop = StopReason::kMaxIter;
  } else if (istop == 3 || istop == 6) {
    rep.stop = StopReason::kConditionLimit;
  } else {
    rep.stop = StopReason::kAtolBtol;
  }
  return rep;
}

bool normal_cg(const SparseMatrix& a, std::span<const double> rhs, double shift, double rel_tol,
               int64_t maxiter, std::vector<double>& z) {
  const int64_t n = a.cols;
  if (static_cast<int64_t>(rhs.size()) != n) throw std::invalid_argument("normal_cg: rhs size");
  z.assign(n, 0.0);
  std::vector<double> r(rhs.begin(), rhs.end());
  std::vector<double> p = r;
  std::vector<double> ap(n, 0.0);
  std::vector<double> tmp_m(a.rows, 0.0);
  double rs = dot(r, r);
  const double target = rel_tol * rel_tol * rs;
  if (rs == 0.0) return true;
  for (int64_t it = 0; it < maxiter; ++it) {
    matvec(a, p, tmp_m);
    rmatvec(a, tmp_m, ap);
    if (shift != 0.0) {
      for (int64_t i = 0; i < n; ++i) ap[i] += shift * p[i];
    }
    const double denom = dot(p, ap);
    if (!(denom > 0.0)) return false;  // lost positive-definiteness
    const double alpha = rs / denom;
    for (int64_t i = 0; i < n; ++i) {
      z[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rs_new = dot(r, r);
    if (rs_new <= target) return true;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (int64_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return false;
}

std::vector<double> tridiag_eigenvalues(std::vector<double> d, std::vector<double> e) {
  const int n = static_cast<int>(d.size());
  if (n == 0) return {};
  if (e.size() + 1 != d.size()) throw std::invalid_argument("tridiag: off-diagonal size");
  e.push_back(0.0);
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 80) throw std::runtime_error("tridiag_eigenvalues: no convergence");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

namespace {

// Deterministic pseudo-random start vector.
std::vector<double> start_vector(int64_t n, uint64_t salt) {
  Rng rng = Rng::derive(0x5EED5EEDULL, {salt, static_cast<uint64_t>(n)});
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_double() - 0.5;
  const double nv = norm2(v);
  for (auto& x : v) x /= nv;
  return v;
}

void reorthogonalize(std::vector<double>& w, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : basis) {
      const double proj = dot(w, q);
      for (size_t i = 0; i < w.size(); ++i) w[i] -= proj * q[i];
    }
  }
}

// Largest Ritz value of the Golub-Kahan bidiagonal matrix, i.e. lambda_max
// of B^T B expressed as a tridiagonal matrix.
double bidiag_sigma_max(const std::vector<double>& alphas, const std::vector<double>& betas) {
  const size_t r = alphas.size();
  std::vector<double> diag(r), off;
  for (size_t i = 0; i < r; ++i) {
    const double beta_next = i + 1 < betas.size() + 1 && i < betas.size() ? betas[i] : 0.0;
    diag[i] = alphas[i] * alphas[i] + beta_next * beta_next;
    if (i + 1 < r) off.push_back(alphas[i + 1] * beta_next);
  }
  const auto eig = tridiag_eigenvalues(diag, off);
  return std::sqrt(std::max(0.0, eig.back()));
}

}  // namespace

SingularEstimate extreme_singular_values(const SparseMatrix& a, int64_t budget,
                                         int64_t cg_cap) {
  SingularEstimate est;
  if (a.nnz() == 0) {
    est.rank_deficient = true;
    return est;
  }
  const int64_t n = a.cols;
  if (budget <= 0) budget = std::min<int64_t>(2 * n, 500);
  budget = std::max<int64_t>(budget, 2);

  // Stage 1: sigma_max by Golub-Kahan bidiagonalization, one-sided full
  // reorthogonalization of the right Lanczos vectors.
  {
    std::vector<double> u = start_vector(a.rows, 1);
    std::vector<double> v(n, 0.0);
    rmatvec(a, u, v);
    double alpha = norm2(v);
    if (alpha == 0.0) {
      est.rank_deficient = true;
      return est;
    }
    scal(v, 1.0 / alpha);
    std::vector<std::vector<double>> vs{v};
    std::vector<double> alphas{alpha};
    std::vector<double> betas;
    std::vector<double> tmp_m(a.rows, 0.0), tmp_n(n, 0.0);
    double prev = 0.0;
    int stable = 0;
    for (int64_t it = 0; it < budget; ++it) {
      matvec(a, vs.back(), tmp_m);
      for (int64_t i = 0; i < a.rows; ++i) u[i] = tmp_m[i] - alphas.back() * u[i];
      const double beta = norm2(u);
      if (beta == 0.0) break;
      scal(u, 1.0 / beta);
      betas.push_back(beta);
      rmatvec(a, u, tmp_n);
      std::vector<double> w(tmp_n.begin(), tmp_n.end());
      for (int64_t i = 0; i < n; ++i) w[i] -= beta * vs.back()[i];
      reorthogonalize(w, vs);
      alpha = norm2(w);
      if (alpha == 0.0) break;
      scal(w, 1.0 / alpha);
      alphas.push_back(alpha);
      vs.push_back(std::move(w));
      ++est.iterations;

      const double cur = bidiag_sigma_max(alphas, betas);
      if (prev > 0.0 && std::abs(cur - prev) <= 1e-12 * cur) {
        if (++stable >= 3) {
          prev = cur;
          break;
        }
      } else {
        stable = 0;
      }
      prev = cur;
    }
    est.sigma_max = prev > 0.0 ? prev : bidiag_sigma_max(alphas, betas);
  }

  // Stage 2: sigma_min by Lanczos on (A^T A)^{-1} with CG inner solves.
  {
    const double cg_tol = 1e-12;
    if (cg_cap <= 0) cg_cap = std::max<int64_t>(4 * n + 100, 1000);
    std::vector<double> q = start_vector(n, 2);
    std::vector<std::vector<double>> qs{q};
    std::vector<double> alphas, betas;
    std::vector<double> w(n, 0.0);
    double prev = 0.0;
    int stable = 0;
    const int64_t outer = std::min<int64_t>(std::max<int64_t>(n, 4), 80);
    for (int64_t it = 0; it < outer; ++it) {
      if (!normal_cg(a, qs.back(), 0.0, cg_tol, cg_cap, w)) {
        est.rank_deficient = true;
        est.sigma_min = 0.0;
        return est;
      }
      if (it > 0) {
        for (int64_t i = 0; i < n; ++i) w[i] -= betas.back() * qs[qs.size() - 2][i];
      }
      const double alpha = dot(w, qs.back());
      for (int64_t i = 0; i < n; ++i) w[i] -= alpha * qs.back()[i];
      reorthogonalize(w, qs);
      alphas.push_back(alpha);
      const double beta = norm2(w);
      const auto eig = tridiag_eigenvalues(
          alphas, std::vector<double>(betas.begin(), betas.end()));
      const double lam = eig.back();
      const double cur = lam > 0.0 ? 1.0 / std::sqrt(lam) : 0.0;
      if (prev > 0.0 && std::abs(cur - prev) <= 1e-10 * cur) {
        if (++stable >= 2) {
          prev = cur;
          break;
        }
      } else {
        stable = 0;
      }
      prev = cur;
      if (beta <= 1e-14 * std::abs(alpha)) break;  // invariant subspace found
      betas.push_back(beta);
      scal(w, 1.0 / beta);
      qs.push_back(w);
    }
    est.sigma_min = prev;
  }

  if (!(est.sigma_min > 1e-12 * est.sigma_max)) {
    est.rank_deficient = true;
  }
  return est;
}

double cond(const SparseMatrix& a) {
  const SingularEstimate est = extreme_singular_values(a);
  if (est.rank_deficient || est.sigma_min == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return est.sigma_max / est.sigma_min;
}

}  // namespace mss
