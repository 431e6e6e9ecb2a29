#pragma once

namespace tskirt {

/// Standard normal CDF, Φ(x).
double probit(double x);

/// Standard normal density, φ(x).
double normal_density(double x);

/// log Φ(x), accurate in both tails (no underflow for very negative x).
double log_probit(double x);

/// Inverse Mills ratio φ(x)/Φ(x), the derivative of log Φ(x).
double inverse_mills(double x);

/// Second derivative of log Φ(x). Always in [-1, 0].
double log_probit_curvature(double x);

/// Clamp a probability into [1e-12, 1 - 1e-12] before taking logarithms
/// of predicted scores.
double clamp_probability(double p);

inline constexpr double kProbabilityFloor = 1e-12;

} // namespace tskirt
