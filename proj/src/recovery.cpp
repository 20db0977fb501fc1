#include "onebit/recovery.hpp"

#include "onebit/core_math.hpp"
#include "onebit/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace onebit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double sqrt_n(Eigen::Index n) { return std::sqrt(static_cast<double>(n)); }

Vector apply_f_prime(const Vector& z) { return z.unaryExpr([](double u) { return f_prime(u); }); }

Eigen::Index count_negative(const Vector& z) { return (z.array() < 0.0).count(); }

double penalty(const Vector& z) {
    double s = 0.0;
    for (Eigen::Index mu = 0; mu < z.size(); ++mu) s += f_pot(z[mu]);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared helpers

Vector normalize_to_sphere(const Vector& v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw std::invalid_argument("normalize_to_sphere: zero vector");
    return v * (sqrt_n(v.size()) / norm);
}

Vector random_sphere_point(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("random_sphere_point: n must be positive");
    Rng rng(derive_seed(seed, {2}));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(static_cast<Eigen::Index>(n));
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return normalize_to_sphere(v);
}

Vector hard_threshold(const Vector& v, std::size_t k) {
    const auto n = static_cast<std::size_t>(v.size());
    if (k >= n) return v;
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(v[a]) > std::abs(v[b]); });
    Vector out = Vector::Zero(v.size());
    for (std::size_t j = 0; j < k; ++j) out[order[j]] = v[order[j]];
    return out;
}

FoldedOperator::FoldedOperator(const Matrix& phi_folded) : by_row_(phi_folded), by_col_(phi_folded) {}

Vector FoldedOperator::apply(const Vector& x) const {
    if (x.size() != cols()) throw std::invalid_argument("FoldedOperator::apply: dimension mismatch");
    Vector z = Vector::Zero(rows());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) z.noalias() += x[i] * by_col_.col(i);
    return z;
}

Vector FoldedOperator::apply_transpose(const Vector& v) const {
    if (v.size() != rows()) throw std::invalid_argument("FoldedOperator::apply_transpose: dimension mismatch");
    Vector g = Vector::Zero(cols());
    for (Eigen::Index mu = 0; mu < v.size(); ++mu)
        if (v[mu] != 0.0) g.noalias() += v[mu] * by_row_.row(mu).transpose();
    return g;
}

double mean_abs_change(const Vector& a, const Vector& b) {
    return (a - b).lpNorm<1>() / static_cast<double>(a.size());
}

Vector constraint_gradient(const FoldedOperator& phi_folded, const Vector& x) {
    return phi_folded.apply_transpose(apply_f_prime(phi_folded.apply(x)));
}

// ---------------------------------------------------------------------------
// RFPI

void RfpiConfig::validate() const {
    if (!(delta > 0.0 && lambda0 > 0.0 && inner_tol > 0.0 && outer_tol > 0.0))
        throw std::invalid_argument("RfpiConfig: delta, lambda0 and tolerances must be positive");
    if (!(lambda_growth > 1.0)) throw std::invalid_argument("RfpiConfig: lambda_growth must exceed 1");
    if (max_inner < 1 || max_outer < 1) throw std::invalid_argument("RfpiConfig: iteration caps must be >= 1");
    if (!(consistency_tol >= 0.0)) throw std::invalid_argument("RfpiConfig: consistency_tol must be non-negative");
}

Vector tangent_projection(const Vector& v, const Vector& x) { return v - (v.dot(x) / x.squaredNorm()) * x; }

std::optional<Vector> rfpi_inner_step(const Vector& x_prev, const FoldedOperator& phi_folded, double delta,
                                      double lambda) {
    if (!(delta > 0.0 && lambda > 0.0)) throw std::invalid_argument("rfpi_inner_step: delta and lambda must be positive");
    const double n = static_cast<double>(x_prev.size());
    const Vector grad = constraint_gradient(phi_folded, x_prev);
    const Vector h = x_prev - delta * tangent_projection(grad, x_prev);
    const double threshold = delta / lambda;
    const Vector u = h.unaryExpr([threshold](double v) { return soft_threshold(v, threshold); });
    const double norm = u.norm();
    if (norm == 0.0) return std::nullopt;
    return Vector(u * (std::sqrt(n) / norm));
}

double rfpi_objective(const Vector& x, const FoldedOperator& phi_folded, double lambda) {
    return x.lpNorm<1>() + lambda * penalty(phi_folded.apply(x));
}

RecoveryResult rfpi_recover(const FoldedInstance& folded, const RfpiConfig& cfg, const Vector& x_init,
                            const TraceSink& trace) {
    cfg.validate();
    const FoldedOperator phi(folded.phi_folded);
    if (x_init.size() != phi.cols()) throw std::invalid_argument("rfpi_recover: x_init has wrong length");
    const auto start = Clock::now();

    RecoveryResult result;
    Vector x = normalize_to_sphere(x_init);
    Vector previous_convergent = x;
    double lambda = cfg.lambda0;

    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        for (int inner = 0; inner < cfg.max_inner; ++inner) {
            auto next = rfpi_inner_step(x, phi, cfg.delta, lambda);
            // Threshold above every |h_i|: move on to the next, smaller threshold.
            if (!next) break;
            const double change = mean_abs_change(*next, x);
            x = std::move(*next);
            ++result.inner_iterations_total;
            if (trace) trace({outer, inner, change, rfpi_objective(x, phi, lambda)});
            if (change < cfg.inner_tol) break;
        }
        result.outer_iterations = outer + 1;

        const bool consistent = phi.apply(x).minCoeff() >= -cfg.consistency_tol;
        if (outer > 0 && consistent && mean_abs_change(x, previous_convergent) < cfg.outer_tol) {
            result.converged = true;
            break;
        }
        previous_convergent = x;
        lambda *= cfg.lambda_growth;
    }

    result.x_hat = std::move(x);
    result.wall_time = seconds_since(start);
    return result;
}

RecoveryResult rfpi_recover(const ProblemInstance& instance, const RfpiConfig& cfg, const Vector& x_init,
                            const TraceSink& trace) {
    return rfpi_recover(fold_signs(instance.phi, instance.y), cfg, x_init, trace);
}

// ---------------------------------------------------------------------------
// CISR

void CisrConfig::validate() const {
    if (!(b_shrink > 0.0 && b_shrink < 1.0)) throw std::invalid_argument("CisrConfig: b_shrink must lie in (0, 1)");
    if (!(inner_tol > 0.0 && outer_tol > 0.0)) throw std::invalid_argument("CisrConfig: tolerances must be positive");
    if (!(initial_b_scale >= 1.0)) throw std::invalid_argument("CisrConfig: initial_b_scale must be >= 1");
    if (max_inner < 1 || max_outer < 1 || biht_iters < 0)
        throw std::invalid_argument("CisrConfig: bad iteration caps");
}

std::optional<CisrState> cisr_inner_step(const CisrState& state, const FoldedOperator& phi_folded, bool onsager) {
    if (!(state.b > 0.0)) throw std::invalid_argument("cisr_inner_step: B must be positive");
    const double n = static_cast<double>(state.x_hat.size());
    const Vector z = phi_folded.apply(state.x_hat);

    CisrState next;
    next.b = state.b;
    next.h = state.h - phi_folded.apply_transpose(apply_f_prime(z)) / state.b;
    next.gamma = static_cast<double>(count_negative(z)) / (n * state.b);

    Vector field = next.h;
    if (onsager) field += next.gamma * state.x_hat;
    const Vector u = field.unaryExpr([](double v) { return soft_threshold(v, 1.0); });
    const double norm = u.norm();
    if (norm == 0.0) return std::nullopt;
    next.x_hat = u * (std::sqrt(n) / norm);
    return next;
}

std::optional<double> single_survivor_b(const Vector& h, const Vector& direction) {
    // Entry i leaves the dead zone at t_i = (sign(d_i) - h_i) / d_i, t = 1/B.
    double t1 = std::numeric_limits<double>::infinity();
    double t2 = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        const double d = direction[i];
        if (d == 0.0) continue;
        const double t = ((d > 0.0 ? 1.0 : -1.0) - h[i]) / d;
        if (!(t > 0.0)) continue;
        if (t < t1) {
            t2 = t1;
            t1 = t;
        } else if (t < t2) {
            t2 = t;
        }
    }
    if (!std::isfinite(t1)) return std::nullopt;
    double t = 0.0;
    if (!std::isfinite(t2)) {
        t = 1.01 * t1;
    } else if (0.99 * t2 > t1) {
        t = 0.99 * t2;
    } else {
        t = 0.5 * (t1 + t2);
    }
    return 1.0 / t;
}

namespace {

// Direction d with shrinkage input H̃ = h + d / B for the next CISR step.
Vector cisr_field_direction(const Vector& x_hat, const FoldedOperator& phi_folded, bool onsager) {
    const Vector z = phi_folded.apply(x_hat);
    Vector d = -phi_folded.apply_transpose(apply_f_prime(z));
    if (onsager) d += (static_cast<double>(count_negative(z)) / static_cast<double>(x_hat.size())) * x_hat;
    return d;
}

// After an all-zero shrinkage from `state`, applies the field updates of
// the idle steps that follow it, stopping one step short of the first
// threshold crossing. Returns the number of steps applied, or -1 when no
// entry can ever cross (no violated constraint is left to move H).
long advance_idle_field(CisrState& state, const FoldedOperator& phi_folded, bool onsager) {
    const double n = static_cast<double>(state.x_hat.size());
    const Vector z = phi_folded.apply(state.x_hat);
    const Vector step = -phi_folded.apply_transpose(apply_f_prime(z)) / state.b;
    // The failed step already applied one increment.
    state.h += step;
    Vector base = state.h;
    if (onsager) base += (static_cast<double>(count_negative(z)) / (n * state.b)) * state.x_hat;
    double first = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        const double g = step[i];
        if (g == 0.0) continue;
        // Smallest k >= 1 with |base_i + k g| > 1.
        const double k = std::floor(((g > 0.0 ? 1.0 : -1.0) - base[i]) / g) + 1.0;
        first = std::min(first, std::max(k, 1.0));
    }
    if (!std::isfinite(first)) return -1;
    const long jump = static_cast<long>(first) - 1;
    if (jump > 0) state.h += static_cast<double>(jump) * step;
    return jump;
}

}  // namespace

RecoveryResult cisr_recover(const FoldedInstance& folded, const CisrConfig& cfg, std::size_t k_prior,
                            const TraceSink& trace) {
    cfg.validate();
    const FoldedOperator phi(folded.phi_folded);
    if (k_prior < 1 || k_prior > static_cast<std::size_t>(phi.cols()))
        throw std::invalid_argument("cisr_recover: k_prior must lie in [1, N]");
    const auto start = Clock::now();

    RecoveryResult result;
    CisrState state;
    state.x_hat = biht_init(folded, k_prior, cfg.biht_iters);
    state.h = Vector::Zero(phi.cols());

    const auto first_b = single_survivor_b(state.h, cisr_field_direction(state.x_hat, phi, cfg.onsager_enabled));
    if (!first_b) {
        // The initializer already satisfies every sign constraint.
        result.x_hat = state.x_hat;
        result.converged = true;
        result.wall_time = seconds_since(start);
        return result;
    }
    // Scaling B up shortens the field steps: the first survivor appears
    // after a few idle steps and the support then grows one entry at a time.
    state.b = cfg.initial_b_scale * *first_b;

    Vector previous_convergent = state.x_hat;
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        for (int inner = 0; inner < cfg.max_inner; ++inner) {
            auto next = cisr_inner_step(state, phi, cfg.onsager_enabled);
            ++result.inner_iterations_total;
            if (!next) {
                // Every entry is inside the dead zone and x̂ stays put, so the
                // following steps add the same increment to H. Skip to the step
                // before the first crossing; the loop then performs it.
                const long skipped = advance_idle_field(state, phi, cfg.onsager_enabled);
                if (skipped < 0) break;
                result.inner_iterations_total += skipped;
                ++result.restarts;
                continue;
            }
            const double change = mean_abs_change(next->x_hat, state.x_hat);
            state = std::move(*next);
            if (trace) trace({outer, inner, change, penalty(phi.apply(state.x_hat))});
            if (change < cfg.inner_tol) break;
        }
        result.outer_iterations = outer + 1;
        // A sparse early convergent can repeat across stages while still
        // violating constraints, so stopping also requires consistency.
        const bool consistent = phi.apply(state.x_hat).minCoeff() >= 0.0;
        if (outer > 0 && consistent && mean_abs_change(state.x_hat, previous_convergent) < cfg.outer_tol) {
            result.converged = true;
            break;
        }
        previous_convergent = state.x_hat;
        state.b *= cfg.b_shrink;
    }

    result.x_hat = std::move(state.x_hat);
    result.wall_time = seconds_since(start);
    return result;
}

RecoveryResult cisr_recover(const ProblemInstance& instance, const CisrConfig& cfg, std::size_t k_prior,
                            const TraceSink& trace) {
    return cisr_recover(fold_signs(instance.phi, instance.y), cfg, k_prior, trace);
}

// ---------------------------------------------------------------------------
// BIHT

Vector biht_init(const FoldedInstance& folded, std::size_t k, int iters) {
    const FoldedOperator phi(folded.phi_folded);
    const auto n = static_cast<std::size_t>(phi.cols());
    if (k < 1 || k > n) throw std::invalid_argument("biht_init: k must lie in [1, N]");
    if (iters < 0) throw std::invalid_argument("biht_init: iters must be non-negative");

    const Vector correlation = phi.apply_transpose(Vector::Ones(phi.rows()));
    Vector x = hard_threshold(correlation, k);
    if (x.norm() > 0.0) {
        x = normalize_to_sphere(x);
        for (int t = 0; t < iters; ++t) {
            x = hard_threshold(x - constraint_gradient(phi, x), k);
            const double norm = x.norm();
            if (norm == 0.0) break;
            x *= std::sqrt(static_cast<double>(n)) / norm;
        }
    }
    if (x.norm() == 0.0) {
        Eigen::Index best = 0;
        correlation.cwiseAbs().maxCoeff(&best);
        x = Vector::Zero(phi.cols());
        x[best] = correlation[best] < 0.0 ? -1.0 : 1.0;
    }
    return normalize_to_sphere(x);
}

Vector biht_init(const ProblemInstance& instance, std::size_t k, int iters) {
    return biht_init(fold_signs(instance.phi, instance.y), k, iters);
}

// ---------------------------------------------------------------------------
// Naive cavity iteration

CavityState naive_cavity_init(const FoldedInstance& folded, std::size_t k_init) {
    const Matrix& phi = folded.phi_folded;
    const FoldedOperator op(phi);
    CavityState s;
    s.x_hat = biht_init(folded, k_init);
    s.a_hat = Vector::Zero(phi.rows());
    s.k_field = op.apply(s.x_hat);
    s.h_field = Vector::Zero(phi.cols());
    s.a_param = 1.0;
    s.gamma = 0.0;
    s.lambda_mult = s.a_param;

    // With â = 0 the first sweep gives H = -Φᶠᵀ f'(K) / B. B = 1 usually
    // leaves every |H_i| below 1 and the sweep degenerates at once, so B is
    // placed between the k-th and (k+1)-th largest field magnitudes: the
    // first sweep then keeps k_init entries active, like the initializer.
    std::vector<double> mags(static_cast<std::size_t>(phi.cols()));
    const Vector d = op.apply_transpose(apply_f_prime(s.k_field));
    for (Eigen::Index i = 0; i < d.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(d[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    const std::size_t k = std::clamp<std::size_t>(k_init, 1, mags.size());
    const double upper = mags[k - 1];
    const double lower = k < mags.size() ? mags[k] : 0.0;
    s.b_param = upper > 0.0 ? (lower > 0.0 ? std::sqrt(upper * lower) : 0.5 * upper) : 1.0;
    return s;
}

bool naive_cavity_sweep(CavityState& s, const FoldedOperator& phi) {
    const double n = static_cast<double>(phi.cols());
    s.k_field = phi.apply(s.x_hat) - s.b_param * s.a_hat;
    s.a_hat = -apply_f_prime(s.k_field) / s.b_param;
    s.h_field = phi.apply_transpose(s.a_hat) + s.gamma * s.x_hat;

    const Vector shrunk = s.h_field.unaryExpr([](double v) { return g_prime(v); });
    const double norm = shrunk.norm();
    if (norm == 0.0) return false;
    s.a_param = norm / std::sqrt(n);
    s.x_hat = shrunk / s.a_param;

    const double active = static_cast<double>((s.h_field.array().abs() > 1.0).count());
    s.b_param = active / (n * s.a_param);
    if (!(s.b_param > 0.0)) return false;
    const double violated = static_cast<double>(count_negative(s.k_field));
    s.gamma = violated / (n * s.b_param);
    s.lambda_mult = s.a_param - s.gamma;
    return std::isfinite(s.a_param) && std::isfinite(s.b_param) && std::isfinite(s.gamma);
}

CavityReport naive_cavity_recover(const FoldedInstance& folded, std::size_t k_init, int max_iters, double tol) {
    if (max_iters < 1 || !(tol > 0.0)) throw std::invalid_argument("naive_cavity_recover: bad iteration settings");
    const auto start = Clock::now();
    CavityReport report;
    CavityState state = naive_cavity_init(folded, k_init);
    const FoldedOperator phi(folded.phi_folded);

    for (int sweep = 0; sweep < max_iters; ++sweep) {
        const Vector before = state.x_hat;
        if (!naive_cavity_sweep(state, phi)) {
            report.degenerate = true;
            break;
        }
        const double residual = mean_abs_change(state.x_hat, before);
        report.residual_trace.push_back(residual);
        ++report.result.inner_iterations_total;
        if (residual < tol) {
            report.result.converged = true;
            break;
        }
    }
    report.result.outer_iterations = 1;
    report.result.x_hat = state.x_hat;
    report.final_state = std::move(state);
    report.result.wall_time = seconds_since(start);
    return report;
}

}  // namespace onebit
