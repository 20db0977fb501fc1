#pragma once

// Scalar special functions shared by the recovery algorithms and the
// replica-symmetric theory.
//
//   f(u) = (u^2/2) Θ(-u)              one-sided quadratic (constraint penalty)
//   g(u) = ((|u|-1)^2/2) Θ(|u|-1)      shrinkage potential
//   H(x) = ∫_x^∞ Dz                    Gaussian upper tail
//
// Kink conventions: f'(0) = 0, f''(0) = 0, g''(±1) = 0.

#include <cmath>
#include <numbers>

namespace onebit {

/// Standard normal density.
inline double gauss_density(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Upper tail of the standard normal, H(x) = P(Z > x).
double gauss_tail(double x);

inline double f_pot(double u) { return u < 0.0 ? 0.5 * u * u : 0.0; }
inline double f_prime(double u) { return u < 0.0 ? u : 0.0; }
inline double f_second(double u) { return u < 0.0 ? 1.0 : 0.0; }

inline double g_pot(double u) {
    const double excess = std::abs(u) - 1.0;
    return excess > 0.0 ? 0.5 * excess * excess : 0.0;
}
inline double g_prime(double u) {
    const double excess = std::abs(u) - 1.0;
    if (excess <= 0.0) return 0.0;
    return u > 0.0 ? excess : -excess;
}
inline double g_second(double u) { return std::abs(u) > 1.0 ? 1.0 : 0.0; }

/// sign(h) * max(|h| - t, 0). Throws std::invalid_argument for t <= 0.
double soft_threshold(double h, double t);

/// min_x { (Qhat/2) x^2 - w x + |x| } in closed form. Throws for Qhat <= 0.
double phi(double w, double q_big_hat);

/// The x attaining phi(w, Qhat), i.e. g'(w) / Qhat.
double phi_minimizer(double w, double q_big_hat);

}  // namespace onebit
