#pragma once

#include <cstddef>
#include <vector>

#include "dvhpen/errors.hpp"
#include "dvhpen/grid.hpp"

namespace dvhpen {

/// Cumulative dose: dose_i = sum_k y[k,i] dt on the masked nodes of the region.
inline DoseField apply_C(const Region &region, const StateField &y, const SpaceTimeGrid &g) {
  require_conforms(y, g, "apply_C");
  std::vector<double> dose(region.size(), 0.0);
  const auto &idx = region.indices();
  for (int k = 0; k < g.nt; ++k) {
    auto yk = y.row(k);
    for (std::size_t j = 0; j < idx.size(); ++j)
      dose[j] += yk[static_cast<std::size_t>(idx[j])];
  }
  for (double &d : dose)
    d *= g.dt;
  return DoseField(region, std::move(dose));
}

/// Adjoint of apply_C: the multiplier extended constantly in time, zero off the region.
inline SpaceTimeArray apply_C_adjoint(const DoseField &mu, const SpaceTimeGrid &g) {
  SpaceTimeArray out(g);
  const auto &idx = mu.region.indices();
  for (int k = 0; k < g.nt; ++k) {
    auto ok = out.row(k);
    for (std::size_t j = 0; j < idx.size(); ++j)
      ok[static_cast<std::size_t>(idx[j])] = mu.values[j];
  }
  return out;
}

/// Accumulates a * C*mu into out without materializing C*mu.
inline void add_C_adjoint(double a, const DoseField &mu, SpaceTimeArray &out) {
  const auto &idx = mu.region.indices();
  for (int k = 0; k < out.nt(); ++k) {
    auto ok = out.row(k);
    for (std::size_t j = 0; j < idx.size(); ++j)
      ok[static_cast<std::size_t>(idx[j])] += a * mu.values[j];
  }
}

namespace detail {
template <typename Pred>
double weighted_fraction(const DoseField &dose, Pred pred) {
  const auto &w = dose.region.weights();
  const double total = dose.region.discrete_measure();
  if (total <= 0.0)
    return 0.0;
  double hit = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (pred(dose.values[j]))
      hit += w[j];
  return hit / total;
}
} // namespace detail

/// Quadrature-weighted fraction of the region where dose > level.
/// Normalized by the discrete measure of the mask so that the full region is exactly 1.
inline double volume_fraction_above(const DoseField &dose, double level) {
  return detail::weighted_fraction(dose, [level](double d) { return d > level; });
}

/// Fraction of the region where dose < level.
inline double volume_fraction_below(const DoseField &dose, double level) {
  return detail::weighted_fraction(dose, [level](double d) { return d < level; });
}

/// Dose-volume histogram: fraction[j] is the volume receiving at least levels[j].
struct DvhCurve {
  std::vector<double> levels;
  std::vector<double> fraction;
};

inline DvhCurve dvh_curve(const DoseField &dose, const std::vector<double> &levels) {
  for (std::size_t j = 1; j < levels.size(); ++j)
    if (!(levels[j] > levels[j - 1]))
      throw ConfigError("dvh_curve: dose levels must be strictly increasing");
  DvhCurve curve;
  curve.levels = levels;
  curve.fraction.reserve(levels.size());
  for (double level : levels)
    curve.fraction.push_back(
        detail::weighted_fraction(dose, [level](double d) { return d >= level; }));
  return curve;
}

/// n equispaced levels on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 0)
    return out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  const double h = (hi - lo) / (n - 1);
  for (int j = 0; j < n - 1; ++j)
    out.push_back(lo + j * h);
  out.push_back(hi);
  return out;
}

} // namespace dvhpen
