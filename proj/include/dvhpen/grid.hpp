#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dvhpen/errors.hpp"

namespace dvhpen {

/// Uniform node grid on [x_left, x_right] (boundary nodes included) times a
/// uniform implicit time grid t_k = k*dt, k = 1..nt.
struct SpaceTimeGrid {
  double x_left = -1.0;
  double x_right = 1.0;
  int nx = 3;
  double T = 1.0;
  int nt = 1;
  double dx = 1.0;
  double dt = 1.0;

  double node(int i) const {
    return i == nx - 1 ? x_right : x_left + i * dx;
  }

  /// Trapezoidal weight of node i.
  double weight(int i) const {
    return (i == 0 || i == nx - 1) ? 0.5 * dx : dx;
  }

  std::vector<double> nodes() const {
    std::vector<double> x(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i)
      x[static_cast<std::size_t>(i)] = node(i);
    return x;
  }

  friend bool operator==(const SpaceTimeGrid &, const SpaceTimeGrid &) = default;
};

inline SpaceTimeGrid build_grid(double x_left, double x_right, int nx, double T,
                                int nt) {
  if (nx < 3)
    throw ConfigError("grid: nx must be >= 3 (got " + std::to_string(nx) + ")");
  if (nt < 1)
    throw ConfigError("grid: nt must be >= 1 (got " + std::to_string(nt) + ")");
  if (!(x_right > x_left))
    throw ConfigError("grid: x_right must exceed x_left");
  if (!(T > 0.0))
    throw ConfigError("grid: T must be positive");
  SpaceTimeGrid g;
  g.x_left = x_left;
  g.x_right = x_right;
  g.nx = nx;
  g.T = T;
  g.nt = nt;
  g.dx = (x_right - x_left) / (nx - 1);
  g.dt = T / nt;
  return g;
}

/// Dense nt x nx array of values at the computed time levels y^1..y^nt.
/// Row k holds time level k+1.
class SpaceTimeArray {
public:
  SpaceTimeArray() = default;
  SpaceTimeArray(int nt, int nx, double value = 0.0)
      : nt_(nt), nx_(nx),
        data_(static_cast<std::size_t>(nt) * static_cast<std::size_t>(nx), value) {}
  explicit SpaceTimeArray(const SpaceTimeGrid &g, double value = 0.0)
      : SpaceTimeArray(g.nt, g.nx, value) {}

  int nt() const { return nt_; }
  int nx() const { return nx_; }
  std::size_t size() const { return data_.size(); }

  double &operator()(int k, int i) {
    return data_[static_cast<std::size_t>(k) * static_cast<std::size_t>(nx_) +
                 static_cast<std::size_t>(i)];
  }
  double operator()(int k, int i) const {
    return data_[static_cast<std::size_t>(k) * static_cast<std::size_t>(nx_) +
                 static_cast<std::size_t>(i)];
  }

  std::span<double> row(int k) {
    return {data_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(nx_),
            static_cast<std::size_t>(nx_)};
  }
  std::span<const double> row(int k) const {
    return {data_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(nx_),
            static_cast<std::size_t>(nx_)};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool conforms(const SpaceTimeGrid &g) const { return nt_ == g.nt && nx_ == g.nx; }

  /// this += a * x
  void axpy(double a, const SpaceTimeArray &x) {
    require_same_shape(x);
    for (std::size_t n = 0; n < data_.size(); ++n)
      data_[n] += a * x.data_[n];
  }
  void scale(double a) {
    for (double &v : data_)
      v *= a;
  }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const SpaceTimeArray &, const SpaceTimeArray &) = default;

private:
  void require_same_shape(const SpaceTimeArray &x) const {
    if (x.nt_ != nt_ || x.nx_ != nx_)
      throw DimensionError("space-time arrays differ in shape");
  }

  int nt_ = 0;
  int nx_ = 0;
  std::vector<double> data_;
};

/// y over Q; Dirichlet nodes are zero at every level.
using StateField = SpaceTimeArray;
/// u over (0,T) x omega_C; zero off the control mask.
using ControlField = SpaceTimeArray;

inline void require_conforms(const SpaceTimeArray &a, const SpaceTimeGrid &g,
                             const char *what) {
  if (!a.conforms(g)) {
    std::ostringstream msg;
    msg << what << ": array is " << a.nt() << "x" << a.nx() << ", grid is " << g.nt
        << "x" << g.nx;
    throw DimensionError(msg.str());
  }
}

/// Discrete L2(Q) pairing: trapezoid in space, rectangle rule (weight dt) in time.
/// Controls vanish off omega_C, so this is also the control-space pairing.
inline double inner_product_Q(const SpaceTimeArray &a, const SpaceTimeArray &b,
                              const SpaceTimeGrid &g) {
  require_conforms(a, g, "inner_product_Q");
  require_conforms(b, g, "inner_product_Q");
  double sum = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    auto ra = a.row(k);
    auto rb = b.row(k);
    double row_sum = 0.5 * (ra[0] * rb[0] + ra[g.nx - 1] * rb[g.nx - 1]);
    for (int i = 1; i < g.nx - 1; ++i)
      row_sum += ra[i] * rb[i];
    sum += row_sum;
  }
  return sum * g.dx * g.dt;
}

inline double norm_Q(const SpaceTimeArray &a, const SpaceTimeGrid &g) {
  return std::sqrt(inner_product_Q(a, a, g));
}

struct Interval {
  double a = 0.0;
  double b = 0.0;
  double length() const { return b - a; }
  friend bool operator==(const Interval &, const Interval &) = default;
};

/// A finite union of closed intervals together with its node mask on a grid.
///
/// Nodes can be removed from the mask with `excluding`, which is how a region
/// defined as a set difference (e.g. [-0.45,0.45] minus [-0.2,0.2]) drops the
/// shared endpoints of a touching neighbour. `measure` is always the Lebesgue
/// measure of the intervals; `discrete_measure` is the quadrature weight of the
/// nodes actually in the mask.
class Region {
public:
  Region() = default;

  Region(const SpaceTimeGrid &g, std::vector<Interval> intervals)
      : intervals_(std::move(intervals)), mask_(static_cast<std::size_t>(g.nx), 0) {
    std::sort(intervals_.begin(), intervals_.end(),
              [](const Interval &l, const Interval &r) { return l.a < r.a; });
    const double tol = 1e-12 * g.dx;
    for (std::size_t j = 0; j < intervals_.size(); ++j) {
      const auto &iv = intervals_[j];
      if (!(iv.b >= iv.a))
        throw ConfigError("region: interval [" + std::to_string(iv.a) + ", " +
                          std::to_string(iv.b) + "] is reversed");
      if (iv.a < g.x_left - tol || iv.b > g.x_right + tol)
        throw ConfigError("region: interval [" + std::to_string(iv.a) + ", " +
                          std::to_string(iv.b) + "] leaves the domain");
      if (j > 0 && iv.a <= intervals_[j - 1].b)
        throw ConfigError("region: intervals overlap");
      measure_ += iv.length();
    }
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.node(i);
      for (const auto &iv : intervals_) {
        if (x >= iv.a - tol && x <= iv.b + tol) {
          mask_[static_cast<std::size_t>(i)] = 1;
          break;
        }
      }
    }
    rebuild(g);
  }

  /// Whole domain.
  static Region domain(const SpaceTimeGrid &g) {
    return Region(g, {Interval{g.x_left, g.x_right}});
  }

  Region excluding(const Region &other, const SpaceTimeGrid &g) const {
    if (other.mask_.size() != mask_.size())
      throw DimensionError("region: masks from different grids");
    Region r = *this;
    for (std::size_t i = 0; i < mask_.size(); ++i)
      if (other.mask_[i])
        r.mask_[i] = 0;
    r.rebuild(g);
    return r;
  }

  const std::vector<Interval> &intervals() const { return intervals_; }
  bool contains(int i) const { return mask_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<int> &indices() const { return indices_; }
  /// Quadrature weights of the masked nodes, aligned with indices().
  const std::vector<double> &weights() const { return weights_; }
  std::size_t size() const { return indices_.size(); }
  double measure() const { return measure_; }
  double discrete_measure() const { return discrete_measure_; }

  bool intersects(const Region &other) const {
    for (const auto &p : intervals_)
      for (const auto &q : other.intervals_)
        if (std::min(p.b, q.b) - std::max(p.a, q.a) > 0.0)
          return true;
    return false;
  }

  friend bool operator==(const Region &l, const Region &r) {
    return l.intervals_ == r.intervals_ && l.mask_ == r.mask_;
  }

private:
  void rebuild(const SpaceTimeGrid &g) {
    indices_.clear();
    weights_.clear();
    discrete_measure_ = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      if (mask_[static_cast<std::size_t>(i)]) {
        indices_.push_back(i);
        weights_.push_back(g.weight(i));
        discrete_measure_ += g.weight(i);
      }
    }
  }

  std::vector<Interval> intervals_;
  std::vector<char> mask_;
  std::vector<int> indices_;
  std::vector<double> weights_;
  double measure_ = 0.0;
  double discrete_measure_ = 0.0;
};

/// Values of a spatial field on the masked nodes of a region.
struct DoseField {
  Region region;
  std::vector<double> values;

  DoseField() = default;
  DoseField(Region r, std::vector<double> v) : region(std::move(r)), values(std::move(v)) {
    if (values.size() != region.size())
      throw DimensionError("dose field: " + std::to_string(values.size()) +
                           " values for a region of " + std::to_string(region.size()) +
                           " nodes");
  }
  DoseField(Region r, double value)
      : region(std::move(r)), values(region.size(), value) {}
};

inline double inner_product_region(const DoseField &a, const DoseField &b) {
  if (!(a.region == b.region))
    throw DimensionError("inner_product_region: fields live on different regions");
  const auto &w = a.region.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j)
    sum += a.values[j] * b.values[j] * w[j];
  return sum;
}

inline double norm_region(const DoseField &a) {
  return std::sqrt(inner_product_region(a, a));
}

} // namespace dvhpen
