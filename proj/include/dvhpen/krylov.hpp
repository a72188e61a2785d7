#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <vector>

namespace dvhpen {

template <typename V>
concept KrylovVector = std::copyable<V> && requires(V v, const V &w, double a) {
  v.axpy(a, w);
  v.scale(a);
};

struct GmresOptions {
  int max_iters = 3000;
  double rel_tol = 1e-10;
};

struct GmresResult {
  int iterations = 0;
  bool converged = false;
  /// Arnoldi produced a zero subdiagonal: the Krylov space is invariant and
  /// the returned iterate is the exact minimizer over it.
  bool breakdown = false;
  double initial_residual = 0.0;
  double residual = 0.0;
  /// Residual norm after each iteration (least-squares estimate).
  std::vector<double> history;
};

/// Full (unrestarted) GMRES for A x = b, x0 = 0, in the geometry of `dot`.
///
/// Arnoldi uses modified Gram-Schmidt with one selective re-orthogonalization
/// pass; the Hessenberg least-squares problem is updated with Givens rotations.
/// If the iteration cap is reached the current minimal-residual iterate is returned.
template <KrylovVector V, typename Op, typename Dot>
GmresResult gmres(const Op &apply, const V &b, V &x, const Dot &dot,
                  const GmresOptions &opts) {
  GmresResult res;
  x = b;
  x.scale(0.0);

  const double beta = std::sqrt(dot(b, b));
  res.initial_residual = beta;
  res.residual = beta;
  if (beta == 0.0) {
    res.converged = true;
    return res;
  }
  const double target = opts.rel_tol * beta;

  std::vector<V> basis;
  basis.reserve(static_cast<std::size_t>(std::min(opts.max_iters, 256)) + 1);
  basis.push_back(b);
  basis.back().scale(1.0 / beta);

  // Column-major Hessenberg columns, already rotated.
  std::vector<std::vector<double>> h;
  std::vector<double> cs, sn, g{beta};

  int j = 0;
  for (; j < opts.max_iters; ++j) {
    V w = apply(basis[static_cast<std::size_t>(j)]);
    std::vector<double> col(static_cast<std::size_t>(j) + 2, 0.0);
    const double norm_before = std::sqrt(dot(w, w));
    for (int i = 0; i <= j; ++i) {
      const double hij = dot(w, basis[static_cast<std::size_t>(i)]);
      col[static_cast<std::size_t>(i)] = hij;
      w.axpy(-hij, basis[static_cast<std::size_t>(i)]);
    }
    double norm_after = std::sqrt(dot(w, w));
    if (norm_after < 0.7 * norm_before) {
      for (int i = 0; i <= j; ++i) {
        const double corr = dot(w, basis[static_cast<std::size_t>(i)]);
        col[static_cast<std::size_t>(i)] += corr;
        w.axpy(-corr, basis[static_cast<std::size_t>(i)]);
      }
      norm_after = std::sqrt(dot(w, w));
    }
    col[static_cast<std::size_t>(j) + 1] = norm_after;

    for (int i = 0; i < j; ++i) {
      const auto n = static_cast<std::size_t>(i);
      const double t = cs[n] * col[n] + sn[n] * col[n + 1];
      col[n + 1] = -sn[n] * col[n] + cs[n] * col[n + 1];
      col[n] = t;
    }
    const auto jj = static_cast<std::size_t>(j);
    const double a = col[jj];
    const double bb = col[jj + 1];
    const double r = std::hypot(a, bb);
    const double c = r == 0.0 ? 1.0 : a / r;
    const double s = r == 0.0 ? 0.0 : bb / r;
    cs.push_back(c);
    sn.push_back(s);
    col[jj] = r;
    col[jj + 1] = 0.0;
    g.push_back(-s * g[jj]);
    g[jj] = c * g[jj];
    h.push_back(std::move(col));

    res.residual = std::abs(g[jj + 1]);
    res.history.push_back(res.residual);

    const bool lucky = norm_after <= 1e-14 * norm_before;
    if (res.residual <= target || lucky) {
      res.converged = res.residual <= target || lucky;
      res.breakdown = lucky;
      ++j;
      break;
    }
    basis.push_back(std::move(w));
    basis.back().scale(1.0 / norm_after);
  }
  res.iterations = j;

  // Back substitution on the rotated upper-triangular system.
  std::vector<double> y(static_cast<std::size_t>(j), 0.0);
  for (int i = j - 1; i >= 0; --i) {
    const auto n = static_cast<std::size_t>(i);
    double s = g[n];
    for (int l = i + 1; l < j; ++l)
      s -= h[static_cast<std::size_t>(l)][n] * y[static_cast<std::size_t>(l)];
    y[n] = h[n][n] == 0.0 ? 0.0 : s / h[n][n];
  }
  for (int i = 0; i < j; ++i)
    x.axpy(y[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(i)]);
  return res;
}

} // namespace dvhpen
