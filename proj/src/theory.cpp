#include "onebit/theory.hpp"

#include "onebit/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace onebit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinTheta = 0.01;

// (v+1) H(1/√v) - √v φ(1/√v): half the Gaussian average of (|w|-1)²Θ(|w|-1)
// for w ~ N(0, v). Its derivative in v is H(1/√v).
double tail_moment(double v) {
    const double x = 1.0 / std::sqrt(v);
    return (v + 1.0) * gauss_tail(x) - std::sqrt(v) * gauss_density(x);
}

// 2 [(1-ρ) T(q̂) + ρ T(q̂ + m̂²)]; equals Q̂² at the fixed point.
double big_q_sq_rhs(double q_hat, double m_hat, double rho) {
    return 2.0 * ((1.0 - rho) * tail_moment(q_hat) + rho * tail_moment(q_hat + m_hat * m_hat));
}

// Probability mass of |√q̂ z + m̂ x0| > 1 split by x0 = 0 and x0 != 0.
double active_fraction(double q_hat, double m_hat, double rho) {
    const double v = q_hat + m_hat * m_hat;
    return 2.0 * ((1.0 - rho) * gauss_tail(1.0 / std::sqrt(q_hat)) + rho * gauss_tail(1.0 / std::sqrt(v)));
}

// arctan(√(ρ-m²)/m) on the branch (0, π/2], with m = 0 mapping to π/2.
double overlap_angle(double m, double rho) { return std::atan2(std::sqrt(std::max(rho - m * m, 0.0)), m); }

void require_finite(const RSFixedPoint& p) {
    if (!(std::isfinite(p.m) && std::isfinite(p.chi) && std::isfinite(p.q_hat) && std::isfinite(p.m_hat) &&
          std::isfinite(p.q_big_hat)) ||
        !(p.chi > 0.0 && p.q_hat > 0.0 && p.q_big_hat > 0.0))
        throw std::domain_error("rs_update: order parameters left the admissible domain");
}

}  // namespace

void RSParams::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("RSParams: alpha must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("RSParams: rho must lie in (0, 1)");
}

RSConjugates rs_conjugates(double chi, double m, const RSParams& params) {
    const double rho = params.rho;
    const double s = std::sqrt(std::max(rho - m * m, 0.0));
    return {params.alpha / (kPi * chi * chi) * (overlap_angle(m, rho) - (m / rho) * s),
            params.alpha * s / (kPi * chi * rho)};
}

RSFixedPoint rs_update(const RSFixedPoint& point, const RSParams& params, double theta) {
    const double rho = params.rho;
    const double m_cap = std::sqrt(rho);
    const double eps = 1e-12;
    const double m = std::clamp(point.m, eps, m_cap - eps);

    RSFixedPoint next = point;
    const RSConjugates conj = rs_conjugates(point.chi, m, params);
    next.q_hat = conj.q_hat;
    next.m_hat = conj.m_hat;
    next.q_big_hat = std::sqrt(big_q_sq_rhs(next.q_hat, next.m_hat, rho));
    next.chi = active_fraction(next.q_hat, next.m_hat, rho) / next.q_big_hat;
    const double v = next.q_hat + next.m_hat * next.m_hat;
    next.m = std::clamp(2.0 * rho * next.m_hat / next.q_big_hat * gauss_tail(1.0 / std::sqrt(v)), eps, m_cap - eps);
    require_finite(next);

    if (theta != 1.0) {
        next.m = theta * next.m + (1.0 - theta) * point.m;
        next.chi = theta * next.chi + (1.0 - theta) * point.chi;
        next.q_hat = theta * next.q_hat + (1.0 - theta) * point.q_hat;
        next.m_hat = theta * next.m_hat + (1.0 - theta) * point.m_hat;
        next.q_big_hat = theta * next.q_big_hat + (1.0 - theta) * point.q_big_hat;
    }
    return next;
}

double rs_residual(const RSFixedPoint& point, const RSParams& params) {
    const RSFixedPoint u = rs_update(point, params, 1.0);
    return std::max({std::abs(u.m - point.m), std::abs(u.chi - point.chi), std::abs(u.q_hat - point.q_hat),
                     std::abs(u.m_hat - point.m_hat), std::abs(u.q_big_hat - point.q_big_hat)});
}

RSFixedPoint rs_default_start(const RSParams& params, double m_fraction) {
    RSFixedPoint p;
    p.m = m_fraction * std::sqrt(params.rho);
    return p;
}

RSFixedPoint rs_iterate(const RSParams& params, RSFixedPoint start, double tol, long max_iters) {
    params.validate();
    RSFixedPoint p = start;
    p.iterations = 0;
    p.converged = false;
    RSFixedPoint best = p;
    best.residual = std::numeric_limits<double>::infinity();
    double theta = 0.5;
    double previous = std::numeric_limits<double>::infinity();
    try {
        for (long it = 0; it < max_iters; ++it) {
            const RSFixedPoint u = rs_update(p, params, 1.0);
            const double r = std::max({std::abs(u.m - p.m), std::abs(u.chi - p.chi), std::abs(u.q_hat - p.q_hat),
                                       std::abs(u.m_hat - p.m_hat), std::abs(u.q_big_hat - p.q_big_hat)});
            p.residual = r;
            p.iterations = it;
            if (r < best.residual) best = p;
            if (r < tol) {
                p.converged = true;
                return p;
            }
            if (r > previous) theta = std::max(0.5 * theta, kMinTheta);
            previous = r;
            p = rs_update(p, params, theta);
        }
    } catch (const std::domain_error&) {
        // Fall through with the best point seen.
    }
    best.iterations = p.iterations;
    best.converged = false;
    return best;
}

RSFixedPoint rs_solve(const RSParams& params, double tol, long max_iters,
                      const std::optional<RSFixedPoint>& continuation) {
    params.validate();
    std::vector<RSFixedPoint> starts = {rs_default_start(params, 0.5), rs_default_start(params, 0.9),
                                        rs_default_start(params, 0.1)};
    if (continuation) starts.push_back(*continuation);

    RSFixedPoint best;
    best.residual = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        RSFixedPoint p = rs_iterate(params, s, tol, max_iters);
        if (p.converged) return p;
        if (p.residual < best.residual) best = p;
    }
    return best;
}

std::vector<RSFixedPoint> rs_sweep(double rho, const std::vector<double>& alphas, double tol, long max_iters) {
    std::vector<RSFixedPoint> out;
    out.reserve(alphas.size());
    std::optional<RSFixedPoint> previous;
    for (double a : alphas) {
        RSFixedPoint p = rs_solve(RSParams{a, rho}, tol, max_iters, previous);
        if (p.converged) previous = p;
        out.push_back(p);
    }
    return out;
}

double rs_phi_average(double q_hat, double m_hat, double q_big_hat, double rho) {
    if (!(q_hat > 0.0 && q_big_hat > 0.0)) throw std::domain_error("rs_phi_average: q_hat and Q_hat must be positive");
    return -big_q_sq_rhs(q_hat, m_hat, rho) / (2.0 * q_big_hat);
}

double rs_free_energy(double chi, double m, double q_hat, double m_hat, double q_big_hat, const RSParams& params) {
    params.validate();
    if (!(chi > 0.0)) throw std::domain_error("rs_free_energy: chi must be positive");
    const double rho = params.rho;
    const double s = std::sqrt(std::max(rho - m * m, 0.0));
    const double energy = params.alpha / (2.0 * kPi * chi) * (overlap_angle(m, rho) - (m / rho) * s);
    const double value =
        rs_phi_average(q_hat, m_hat, q_big_hat, rho) - 0.5 * q_big_hat + 0.5 * q_hat * chi + m_hat * m + energy;
    if (!std::isfinite(value)) throw std::domain_error("rs_free_energy: non-finite value");
    return value;
}

double rs_free_energy(const RSFixedPoint& point, const RSParams& params) {
    return rs_free_energy(point.chi, point.m, point.q_hat, point.m_hat, point.q_big_hat, params);
}

RSStability rs_stability(const RSFixedPoint& point, const RSParams& params) {
    params.validate();
    const double qc = point.q_big_hat * point.chi;
    RSStability out;
    out.at_lhs = params.alpha / (kPi * qc * qc) * overlap_angle(point.m, params.rho) *
                     active_fraction(point.q_hat, point.m_hat, params.rho) -
                 1.0;
    out.stable = out.at_lhs < 0.0;
    return out;
}

RSPrediction rs_predict(const RSFixedPoint& point, const RSParams& params) {
    if (!point.converged) throw std::runtime_error("rs_predict: RS fixed point did not converge");
    RSPrediction out;
    out.direction_cosine = std::clamp(point.m / std::sqrt(params.rho), 0.0, 1.0);
    out.mse = 2.0 * (1.0 - out.direction_cosine);
    out.fp = 2.0 * gauss_tail(1.0 / std::sqrt(point.q_hat));
    out.fn = 1.0 - 2.0 * gauss_tail(1.0 / std::sqrt(point.q_hat + point.m_hat * point.m_hat));
    const RSStability st = rs_stability(point, params);
    out.at_lhs = st.at_lhs;
    out.stable_rs = st.stable;
    return out;
}

RSPrediction rs_predict(const RSParams& params) { return rs_predict(rs_solve(params), params); }

}  // namespace onebit
