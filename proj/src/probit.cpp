#include "tskirt/probit.hpp"

#include <algorithm>
#include <cmath>

namespace tskirt {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Below this point erfc underflows relative precision; switch to the
// asymptotic expansion of the Mills ratio.
constexpr double kAsymptoticCut = -37.0;

// Asymptotic series S(x) with Φ(x) ≈ φ(x) S(x) / (-x) for x → -∞,
// returned as S - 1 to avoid cancellation.
double mills_series_minus_one(double x) {
    const double w = 1.0 / (x * x);
    return w * (-1.0 + w * (3.0 + w * (-15.0 + w * (105.0 - 945.0 * w))));
}

double log_normal_density(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

} // namespace

double probit(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_density(double x) { return std::exp(log_normal_density(x)); }

double log_probit(double x) {
    if (x > 0.0) {
        return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
    }
    if (x > kAsymptoticCut) {
        return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    }
    return log_normal_density(x) - std::log(-x) + std::log1p(mills_series_minus_one(x));
}

double inverse_mills(double x) {
    if (x > kAsymptoticCut) {
        return std::exp(log_normal_density(x) - log_probit(x));
    }
    return -x / (1.0 + mills_series_minus_one(x));
}

double log_probit_curvature(double x) {
    double h;
    if (x > kAsymptoticCut) {
        const double m = inverse_mills(x);
        h = -m * (x + m);
    } else {
        // m = -x/S, x + m = x (S - 1) / S
        const double s_minus_one = mills_series_minus_one(x);
        const double s = 1.0 + s_minus_one;
        const double m = -x / s;
        h = -m * (x * s_minus_one / s);
    }
    return std::clamp(h, -1.0, 0.0);
}

double clamp_probability(double p) {
    return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

} // namespace tskirt
