#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "dvhpen/errors.hpp"

namespace dvhpen {

/// Weights and levels of the dose-penalized problem.
///
/// beta1 weights the target term (dose below U on omega_T), beta2 the risk
/// term (dose above L on omega_R). In state-constraint mode the betas are
/// ignored and 1/gamma is the quadratic penalty weight.
struct PenaltyConfig {
  double alpha = 0.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double U = 0.5;
  double L = 0.2;
  double u_min = 0.0;
  double u_max = 2.0;
  double gamma = 1.0;

  void validate() const {
    if (!(alpha >= 0.0))
      throw ConfigError("penalty: alpha must be >= 0");
    if (!(beta1 > 0.0) || !(beta2 > 0.0))
      throw ConfigError("penalty: beta1 and beta2 must be positive");
    if (!(L > 0.0) || !(L < U))
      throw ConfigError("penalty: levels must satisfy 0 < L < U");
    if (!(u_min < u_max))
      throw ConfigError("penalty: u_min must be below u_max");
    if (!(gamma > 0.0))
      throw ConfigError("penalty: gamma must be positive");
  }

  friend bool operator==(const PenaltyConfig &, const PenaltyConfig &) = default;
};

// Risk integrand |(v-L)^+| and target integrand |(v-U)^-|.
constexpr double g_plus(double v, double L) { return v > L ? v - L : 0.0; }
constexpr double g_minus(double v, double U) { return v < U ? U - v : 0.0; }

// Proximal maps of gamma*g. Closed middle intervals take ties at the kinks.
constexpr double prox_g_plus(double v, double L, double gamma) {
  if (v < L)
    return v;
  if (v <= L + gamma)
    return L;
  return v - gamma;
}

constexpr double prox_g_minus(double v, double U, double gamma) {
  if (v < U - gamma)
    return v + gamma;
  if (v <= U)
    return U;
  return v;
}

/// Moreau-Yosida regularization of the subdifferential of g_plus.
constexpr double my_plus(double v, double L, double gamma) {
  if (v < L)
    return 0.0;
  if (v <= L + gamma)
    return (v - L) / gamma;
  return 1.0;
}

constexpr double my_minus(double v, double U, double gamma) {
  if (v < U - gamma)
    return -1.0;
  if (v <= U)
    return (v - U) / gamma;
  return 0.0;
}

// Moreau envelopes (Huber-type smoothings of g_plus / g_minus).
constexpr double envelope_plus(double v, double L, double gamma) {
  if (v < L)
    return 0.0;
  if (v <= L + gamma)
    return (v - L) * (v - L) / (2.0 * gamma);
  return v - L - 0.5 * gamma;
}

constexpr double envelope_minus(double v, double U, double gamma) {
  if (v < U - gamma)
    return U - v - 0.5 * gamma;
  if (v <= U)
    return (v - U) * (v - U) / (2.0 * gamma);
  return 0.0;
}

// Newton-derivative selectors: my_plus' = chi_plus / gamma, likewise for minus.
constexpr int chi_plus(double v, double L, double gamma) {
  return (v >= L && v <= L + gamma) ? 1 : 0;
}
constexpr int chi_minus(double v, double U, double gamma) {
  return (v >= U - gamma && v <= U) ? 1 : 0;
}

constexpr double project_admissible(double v, double u_min, double u_max) {
  return std::clamp(v, u_min, u_max);
}
constexpr int chi_admissible(double v, double u_min, double u_max) {
  return (v >= u_min && v <= u_max) ? 1 : 0;
}

/// Projection of a scalar onto the subdifferential of g_plus at v.
constexpr double project_onto_subdiff_plus(double mu, double v, double L) {
  if (v < L)
    return 0.0;
  if (v > L)
    return 1.0;
  return std::clamp(mu, 0.0, 1.0);
}

constexpr double project_onto_subdiff_minus(double mu, double v, double U) {
  if (v < U)
    return -1.0;
  if (v > U)
    return 0.0;
  return std::clamp(mu, -1.0, 0.0);
}

} // namespace dvhpen
