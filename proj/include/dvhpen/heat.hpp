#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dvhpen/errors.hpp"
#include "dvhpen/grid.hpp"

namespace dvhpen {

/// Inner product on the control space V.
///
/// `nodal`: <u,v>_V = sum_{k,i} u[k,i] v[k,i] over control nodes (one unit per
/// degree of freedom). `quadrature`: the discrete L2 pairing with trapezoid
/// weights in space and dt in time, i.e. inner_product_Q restricted to omega_C.
/// The state and dose spaces always use quadrature weights.
enum class ControlMetric { nodal, quadrature };

/// Implicit-Euler discretization of y_t - c y_xx = E_{omega_C} u with
/// homogeneous Dirichlet data and y(0) = y0.
///
/// Each step solves (I - dt c D2) y^{k+1} = y^k + dt E u^{k+1} on the interior
/// nodes. The interior matrix is constant, symmetric and diagonally dominant;
/// its Thomas factorization is computed once at construction.
class HeatModel {
public:
  HeatModel(SpaceTimeGrid grid, double c, std::vector<double> y0, Region control_region,
            ControlMetric metric = ControlMetric::nodal)
      : grid_(grid), c_(c), y0_(std::move(y0)), control_(std::move(control_region)),
        metric_(metric) {
    if (!(c_ > 0.0))
      throw ConfigError("heat: diffusivity c must be positive");
    if (y0_.size() != static_cast<std::size_t>(grid_.nx))
      throw DimensionError("heat: y0 has " + std::to_string(y0_.size()) +
                           " entries, grid has " + std::to_string(grid_.nx) + " nodes");
    // Dirichlet nodes are pinned regardless of what the caller supplied.
    y0_.front() = 0.0;
    y0_.back() = 0.0;
    factorize();
  }

  HeatModel(SpaceTimeGrid grid, double c, Region control_region,
            ControlMetric metric = ControlMetric::nodal)
      : HeatModel(grid, c, std::vector<double>(static_cast<std::size_t>(grid.nx), 0.0),
                  std::move(control_region), metric) {}

  const SpaceTimeGrid &grid() const { return grid_; }
  double diffusivity() const { return c_; }
  const std::vector<double> &initial_state() const { return y0_; }
  const Region &control_region() const { return control_; }
  ControlMetric control_metric() const { return metric_; }

  /// Weight of control node i in <.,.>_V (per time level).
  double control_weight(int i) const {
    return metric_ == ControlMetric::nodal ? 1.0 : grid_.weight(i) * grid_.dt;
  }

  /// Forward sweep from the given initial state; returns levels 1..nt.
  StateField propagate(std::span<const double> initial, const ControlField &u) const {
    require_conforms(u, grid_, "heat: control");
    const int nx = grid_.nx;
    StateField y(grid_);
    std::vector<double> rhs(static_cast<std::size_t>(nx));
    std::vector<double> prev(initial.begin(), initial.end());
    for (int k = 0; k < grid_.nt; ++k) {
      auto uk = u.row(k);
      for (int i = 1; i < nx - 1; ++i) {
        const auto n = static_cast<std::size_t>(i);
        rhs[n] = prev[n] + (control_.contains(i) ? grid_.dt * uk[n] : 0.0);
      }
      auto yk = y.row(k);
      solve_interior(rhs, yk);
      prev.assign(yk.begin(), yk.end());
    }
    return y;
  }

  /// Transposed sweep: q^nt = M^{-1} w^nt, q^k = M^{-1}(w^k + q^{k+1}).
  /// The Euclidean transpose of S0 is dt q; the adjoint from L2(Q) into V
  /// rescales node i by (quadrature weight * dt) / control_weight(i).
  ControlField adjoint_sweep(const SpaceTimeArray &w) const {
    require_conforms(w, grid_, "heat: adjoint source");
    const int nx = grid_.nx;
    ControlField out(grid_);
    std::vector<double> rhs(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> q(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> scale(static_cast<std::size_t>(nx), 0.0);
    for (int i = 1; i < nx - 1; ++i)
      if (control_.contains(i))
        scale[static_cast<std::size_t>(i)] =
            grid_.dt * grid_.weight(i) * grid_.dt / control_weight(i);
    for (int k = grid_.nt - 1; k >= 0; --k) {
      auto wk = w.row(k);
      for (int i = 1; i < nx - 1; ++i) {
        const auto n = static_cast<std::size_t>(i);
        rhs[n] = wk[n] + q[n];
      }
      solve_interior(rhs, q);
      auto ok = out.row(k);
      for (int i = 1; i < nx - 1; ++i)
        ok[static_cast<std::size_t>(i)] =
            scale[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(i)];
    }
    return out;
  }

private:
  void factorize() {
    const int m = grid_.nx - 2;
    const double r = grid_.dt * c_ / (grid_.dx * grid_.dx);
    diag_ = 1.0 + 2.0 * r;
    off_ = -r;
    cprime_.assign(static_cast<std::size_t>(m), 0.0);
    inv_denom_.assign(static_cast<std::size_t>(m), 0.0);
    double denom = diag_;
    inv_denom_[0] = 1.0 / denom;
    cprime_[0] = off_ / denom;
    for (int j = 1; j < m; ++j) {
      const auto n = static_cast<std::size_t>(j);
      denom = diag_ - off_ * cprime_[n - 1];
      inv_denom_[n] = 1.0 / denom;
      cprime_[n] = off_ / denom;
    }
  }

  // Solves the interior system for nodes 1..nx-2; boundary entries of x are set to 0.
  // rhs and x may alias.
  void solve_interior(std::span<const double> rhs, std::span<double> x) const {
    const int nx = grid_.nx;
    const int m = nx - 2;
    // forward elimination into x[1..m]
    x[1] = rhs[1] * inv_denom_[0];
    for (int j = 1; j < m; ++j) {
      const auto n = static_cast<std::size_t>(j);
      x[n + 1] = (rhs[n + 1] - off_ * x[n]) * inv_denom_[n];
    }
    for (int j = m - 2; j >= 0; --j) {
      const auto n = static_cast<std::size_t>(j);
      x[n + 1] -= cprime_[n] * x[n + 2];
    }
    x[0] = 0.0;
    x[static_cast<std::size_t>(nx - 1)] = 0.0;
  }

  SpaceTimeGrid grid_;
  double c_;
  std::vector<double> y0_;
  Region control_;
  ControlMetric metric_;
  double diag_ = 1.0;
  double off_ = 0.0;
  std::vector<double> cprime_;
  std::vector<double> inv_denom_;
};

/// Affine control-to-state map S.
inline StateField solve_state(const HeatModel &model, const ControlField &u) {
  return model.propagate(model.initial_state(), u);
}

/// Linear part S0 (zero initial state).
inline StateField apply_S0(const HeatModel &model, const ControlField &u) {
  const std::vector<double> zero(static_cast<std::size_t>(model.grid().nx), 0.0);
  return model.propagate(zero, u);
}

/// Exact adjoint of apply_S0 from L2(Q) into the control space V.
inline ControlField apply_S0_adjoint(const HeatModel &model, const SpaceTimeArray &w) {
  return model.adjoint_sweep(w);
}

inline double inner_product_V(const ControlField &a, const ControlField &b,
                              const HeatModel &model) {
  const auto &g = model.grid();
  require_conforms(a, g, "inner_product_V");
  require_conforms(b, g, "inner_product_V");
  const auto &idx = model.control_region().indices();
  std::vector<double> w(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j)
    w[j] = model.control_weight(idx[j]);
  double sum = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    auto ra = a.row(k);
    auto rb = b.row(k);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto n = static_cast<std::size_t>(idx[j]);
      sum += w[j] * ra[n] * rb[n];
    }
  }
  return sum;
}

inline double norm_V(const ControlField &a, const HeatModel &model) {
  return std::sqrt(inner_product_V(a, a, model));
}

} // namespace dvhpen
