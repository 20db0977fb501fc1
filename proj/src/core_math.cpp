#include "onebit/core_math.hpp"

#include <cassert>
#include <stdexcept>

namespace onebit {

namespace {

// Mills ratio R(x) = H(x)/density(x) by the Laplace continued fraction
//   R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))),
// evaluated with the modified Lentz method. Converges fast for x > 8.
double mills_ratio(double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int k = 1; k < 500; ++k) {
        const double a = static_cast<double>(k);
        d = x + a * d;
        if (std::abs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return 1.0 / f;
}

}  // namespace

double gauss_tail(double x) {
    assert(std::isfinite(x));
    if (x > 8.0) return gauss_density(x) * mills_ratio(x);
    if (x < -8.0) return 1.0 - gauss_density(-x) * mills_ratio(-x);
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double soft_threshold(double h, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("soft_threshold: threshold must be positive");
    const double excess = std::abs(h) - t;
    if (excess <= 0.0) return 0.0;
    return h > 0.0 ? excess : -excess;
}

double phi(double w, double q_big_hat) {
    if (!(q_big_hat > 0.0)) throw std::invalid_argument("phi: Qhat must be positive");
    const double excess = std::abs(w) - 1.0;
    if (excess <= 0.0) return 0.0;
    return -excess * excess / (2.0 * q_big_hat);
}

double phi_minimizer(double w, double q_big_hat) {
    if (!(q_big_hat > 0.0)) throw std::invalid_argument("phi_minimizer: Qhat must be positive");
    return g_prime(w) / q_big_hat;
}

}  // namespace onebit
