#pragma once

// Signal recovery from folded 1-bit measurements (constraint: Φᶠ x > 0,
// ‖x‖₂ = √N). All recoverers are deterministic in their inputs.

#include "onebit/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace onebit {

struct RecoveryResult {
    Vector x_hat;
    long inner_iterations_total = 0;
    int outer_iterations = 0;
    bool converged = false;
    double wall_time = 0.0;  // seconds, filled by the caller that times the run
    int restarts = 0;
};

/// Optional per-iteration trace sink: (outer, inner, residual, objective).
struct TracePoint {
    int outer;
    long inner;
    double residual;
    double objective;
};
using TraceSink = std::function<void(const TracePoint&)>;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Rescales a nonzero vector to Euclidean norm √N.
Vector normalize_to_sphere(const Vector& v);

/// Uniformly random direction scaled to norm √N.
Vector random_sphere_point(std::size_t n, std::uint64_t seed);

/// Keeps the k largest-magnitude entries; ties go to the lower index.
Vector hard_threshold(const Vector& v, std::size_t k);

/// Φᶠ with both storage orders, so products skip zero entries of the
/// operand: Φᶠx costs O(M·nnz(x)) and Φᶠᵀv costs O(N·nnz(v)). Recovery
/// iterates are sparse and few constraints are violated near convergence.
class FoldedOperator {
public:
    explicit FoldedOperator(const Matrix& phi_folded);

    Vector apply(const Vector& x) const;
    Vector apply_transpose(const Vector& v) const;

    Eigen::Index rows() const { return by_row_.rows(); }
    Eigen::Index cols() const { return by_row_.cols(); }

private:
    Matrix by_row_;
    Eigen::MatrixXd by_col_;
};

/// Σ_i |a_i - b_i| / N.
double mean_abs_change(const Vector& a, const Vector& b);

/// Φᶠᵀ f'(Φᶠ x): gradient of the one-sided quadratic constraint penalty.
Vector constraint_gradient(const FoldedOperator& phi_folded, const Vector& x);

// ---------------------------------------------------------------------------
// RFPI: renormalized fixed point iteration
// ---------------------------------------------------------------------------

struct RfpiConfig {
    double delta = 0.01;
    double lambda0 = 0.005;
    double lambda_growth = 2.0;
    double inner_tol = 1e-8;
    double outer_tol = 1e-8;
    int max_inner = 10000;
    int max_outer = 60;
    /// The outer loop may only stop once min_μ (Φᶠx)_μ >= -consistency_tol.
    /// Early stages with a large threshold can park on a sparse point the
    /// penalty cannot move; their convergents repeat without being consistent.
    double consistency_tol = 1e-3;

    void validate() const;
};

/// Component of v orthogonal to x, i.e. its projection onto the tangent
/// space of the sphere through x.
Vector tangent_projection(const Vector& v, const Vector& x);

/// One gradient-projection + shrinkage + renormalization step. Returns
/// nullopt when the shrinkage zeroes every entry.
std::optional<Vector> rfpi_inner_step(const Vector& x_prev, const FoldedOperator& phi_folded, double delta,
                                      double lambda);

/// ‖x‖₁ + λ Σ_μ f((Φᶠx)_μ), the penalized cost an RFPI stage descends.
double rfpi_objective(const Vector& x, const FoldedOperator& phi_folded, double lambda);

/// Double loop: inner fixed-point iteration per λ, λ multiplied by
/// lambda_growth between stages, each stage warm-started from the last.
RecoveryResult rfpi_recover(const FoldedInstance& folded, const RfpiConfig& cfg, const Vector& x_init,
                            const TraceSink& trace = {});
RecoveryResult rfpi_recover(const ProblemInstance& instance, const RfpiConfig& cfg, const Vector& x_init,
                            const TraceSink& trace = {});

// ---------------------------------------------------------------------------
// CISR: cavity-inspired signal recovery
// ---------------------------------------------------------------------------

struct CisrConfig {
    double b_shrink = 0.9;
    double inner_tol = 1e-8;
    double outer_tol = 1e-8;
    int max_inner = 10000;
    int max_outer = 200;
    bool onsager_enabled = true;
    /// Initial B as a multiple of the single-survivor value. Larger values
    /// give sparser, more accurate output at the cost of more iterations.
    double initial_b_scale = 5.0;
    int biht_iters = 50;

    void validate() const;
};

struct CisrState {
    Vector x_hat;  // norm √N
    Vector h;      // accumulated field H (without the Onsager correction)
    double b = 1.0;
    double gamma = 0.0;
};

/// One CISR inner iteration. The stored field is H_k; the Onsager
/// correction Γ x̂ only enters the shrinkage input. Returns nullopt when
/// the shrinkage output is all zero.
std::optional<CisrState> cisr_inner_step(const CisrState& state, const FoldedOperator& phi_folded, bool onsager);

/// Smallest-B choice that lets exactly one entry of
/// soft_threshold(h + d/B, 1) be nonzero: the second threshold crossing in
/// 1/B is kept just out of reach (factor 0.99), falling back to the midpoint
/// of the first two crossings when they are too close. nullopt when no
/// entry can ever cross (direction is zero).
std::optional<double> single_survivor_b(const Vector& h, const Vector& direction);

RecoveryResult cisr_recover(const FoldedInstance& folded, const CisrConfig& cfg, std::size_t k_prior,
                            const TraceSink& trace = {});
RecoveryResult cisr_recover(const ProblemInstance& instance, const CisrConfig& cfg, std::size_t k_prior,
                            const TraceSink& trace = {});

// ---------------------------------------------------------------------------
// BIHT initializer
// ---------------------------------------------------------------------------

/// Binary iterative hard thresholding on the folded system, started from
/// hard_threshold_k(Φᶠᵀ 1). Returns a vector with at most k nonzeros and
/// norm √N.
Vector biht_init(const FoldedInstance& folded, std::size_t k, int iters = 50);
Vector biht_init(const ProblemInstance& instance, std::size_t k, int iters = 50);

// ---------------------------------------------------------------------------
// Naive cavity iteration
// ---------------------------------------------------------------------------

struct CavityState {
    Vector x_hat;
    Vector a_hat;    // Lagrange multipliers, length M
    Vector k_field;  // K_μ
    Vector h_field;  // H_i
    double a_param = 1.0;
    double b_param = 1.0;
    double gamma = 0.0;
    double lambda_mult = 0.0;  // Λ, implied by the normalization of x̂
};

struct CavityReport {
    RecoveryResult result;
    std::vector<double> residual_trace;  // mean |Δx̂| per sweep
    bool degenerate = false;             // A or B collapsed to zero
    CavityState final_state;
};

/// One sweep of the self-consistent cavity equations, in order K, â, H, x̂,
/// then A (normalization), B and Γ. Returns false if A or B degenerates.
bool naive_cavity_sweep(CavityState& state, const FoldedOperator& phi_folded);

/// Initial state: x̂ from biht_init(k_init), â = 0, A = 1, Γ = 0, and B set
/// so the first sweep activates k_init entries (B = 1 if no field exists).
CavityState naive_cavity_init(const FoldedInstance& folded, std::size_t k_init);

CavityReport naive_cavity_recover(const FoldedInstance& folded, std::size_t k_init, int max_iters, double tol);

}  // namespace onebit
