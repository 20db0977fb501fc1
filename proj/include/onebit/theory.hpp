#pragma once

// Replica-symmetric (RS) performance prediction for l1 recovery from
// 1-bit measurements: saddle-point solver, free energy, de Almeida-Thouless
// stability and the derived MSE/FP/FN.

#include <optional>
#include <vector>

namespace onebit {

struct RSParams {
    double alpha = 3.0;  // M/N
    double rho = 0.125;  // signal density

    void validate() const;
};

struct RSFixedPoint {
    double m = 0.0;  // overlap with the signal, 0 <= m <= sqrt(rho)
    double chi = 1.0;
    double q_hat = 1.0;
    double m_hat = 1.0;
    double q_big_hat = 1.0;
    double residual = 0.0;  // max |update(p) - p| over the five variables
    long iterations = 0;
    bool converged = false;
};

struct RSPrediction {
    double mse = 2.0;
    double direction_cosine = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    bool stable_rs = false;
    double at_lhs = 0.0;
};

struct RSConjugates {
    double q_hat = 0.0;
    double m_hat = 0.0;
};

/// q̂ and m̂ implied by (chi, m); both vanish at m = sqrt(rho). m = 0 takes
/// the arctan limit pi/2.
RSConjugates rs_conjugates(double chi, double m, const RSParams& params);

/// One sweep of the saddle-point equations in the order q̂, m̂, Q̂, χ, m,
/// each new value mixed as theta*new + (1-theta)*old. residual and
/// iterations are carried over unchanged. Throws std::domain_error when an
/// update leaves the finite domain.
RSFixedPoint rs_update(const RSFixedPoint& point, const RSParams& params, double theta = 1.0);

/// max |rs_update(point, 1) - point| over the five variables.
double rs_residual(const RSFixedPoint& point, const RSParams& params);

/// Default start (0.5 sqrt(rho), 1, 1, 1, 1) scaled by `m_fraction`.
RSFixedPoint rs_default_start(const RSParams& params, double m_fraction = 0.5);

/// Damped iteration from one start: theta starts at 0.5, halves whenever
/// the residual grows, never below 0.01.
RSFixedPoint rs_iterate(const RSParams& params, RSFixedPoint start, double tol = 1e-12, long max_iters = 100000);

/// Solves from the default start, then from m = 0.9 and 0.1 sqrt(rho), then
/// from `continuation` if given. Returns the first converged point, or the
/// lowest-residual attempt flagged converged = false.
RSFixedPoint rs_solve(const RSParams& params, double tol = 1e-12, long max_iters = 100000,
                      const std::optional<RSFixedPoint>& continuation = std::nullopt);

/// Solves every alpha in order at fixed rho, passing each solution on as the
/// continuation start of the next.
std::vector<RSFixedPoint> rs_sweep(double rho, const std::vector<double>& alphas, double tol = 1e-12,
                                   long max_iters = 100000);

/// Average of phi(sqrt(q̂) z + m̂ x0; Q̂) over z ~ N(0,1) and
/// x0 ~ (1-rho) delta_0 + rho N(0,1), in closed form.
double rs_phi_average(double q_hat, double m_hat, double q_big_hat, double rho);

/// RS free energy density as a function of all five order parameters. The
/// solver's fixed points are its stationary points.
double rs_free_energy(double chi, double m, double q_hat, double m_hat, double q_big_hat, const RSParams& params);
double rs_free_energy(const RSFixedPoint& point, const RSParams& params);

struct RSStability {
    double at_lhs = 0.0;
    bool stable = false;  // at_lhs < 0
};
RSStability rs_stability(const RSFixedPoint& point, const RSParams& params);

/// MSE, cosine, FP and FN of the RS minimizer x* = g'(sqrt(q̂) z + m̂ x0)/Q̂.
/// Throws std::runtime_error if `point` is not converged.
RSPrediction rs_predict(const RSFixedPoint& point, const RSParams& params);

/// rs_solve followed by rs_predict.
RSPrediction rs_predict(const RSParams& params);

}  // namespace onebit
