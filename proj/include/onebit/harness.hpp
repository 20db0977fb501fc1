#pragma once

// Experiment orchestration: seeded paired trials over (rho, alpha), timing
// benchmarks, the naive cavity report and RS theory tables, all written as
// CSV. Every trial is reproducible from (plan, rho index, alpha index, t).

#include "onebit/metrics.hpp"
#include "onebit/recovery.hpp"
#include "onebit/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace onebit {

enum class Algorithm { rfpi, cisr, nort, naive_cavity };

std::string_view algorithm_name(Algorithm a);
/// Throws std::invalid_argument on an unknown name.
Algorithm parse_algorithm(std::string_view name);

struct ExperimentPlan {
    std::size_t n = 128;
    std::vector<double> alphas = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    std::vector<double> rhos = {0.125};
    int trials = 200;
    std::uint64_t master_seed = 20190707;
    std::vector<Algorithm> algorithms = {Algorithm::rfpi};
    RfpiConfig rfpi_cfg;
    CisrConfig cisr_cfg;
    std::filesystem::path output_dir;  // empty: compute only, write nothing
    bool theory_only = false;
    int parallelism = 0;            // 0: ONEBIT_CS_THREADS, else hardware threads
    bool bernoulli_support = false;  // default: exactly round(rho n) nonzeros
    /// Support threshold for FP/FN on the sqrt(N)-normalized estimate. RFPI
    /// leaves a tail of tiny nonzero entries (its final thresholds are
    /// ~1e-10), so a machine-precision cutoff would count nearly every entry.
    double zero_tol = 1e-3;
    int cavity_max_sweeps = 500;
    double cavity_tol = 1e-8;

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

/// Worker count: positive `requested` wins, then ONEBIT_CS_THREADS, then the
/// hardware thread count (at least 1).
int resolve_parallelism(int requested);

/// Support size used for signal generation and as the CISR prior.
std::size_t support_size(std::size_t n, double rho);

/// Seed of trial t in cell (rho index, alpha index).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t rho_index, std::size_t alpha_index, int t);

struct TrialRecord {
    double rho = 0.0;
    double alpha = 0.0;
    int trial = 0;
    Algorithm algorithm = Algorithm::rfpi;
    std::uint64_t seed = 0;
    std::optional<TrialMetrics> metrics;  // absent when the run failed
    double wall_time = 0.0;
    double x_hat_norm = 0.0;  // Euclidean norm of the returned estimate
    long inner_iterations = 0;
    int outer_iterations = 0;
    bool converged = false;
    int restarts = 0;
    std::string error;  // non-empty when the run threw
};

/// Runs one algorithm on one instance and times only the recovery call.
TrialRecord run_trial(const ProblemInstance& instance, Algorithm algorithm, const ExperimentPlan& plan, double rho,
                      int trial);

struct ConditionSummary {
    double rho = 0.0;
    double alpha = 0.0;
    Algorithm algorithm = Algorithm::rfpi;
    std::size_t trials = 0;     // records with metrics
    std::size_t failed = 0;     // records whose run threw
    std::size_t converged = 0;
    MetricsSummary metrics;
    FieldSummary wall_time;
    FieldSummary inner_iterations;
};

struct TheoryRow {
    double rho = 0.0;
    double alpha = 0.0;
    RSFixedPoint point;
    std::optional<RSPrediction> prediction;  // absent when not converged
};

struct PlanResults {
    std::vector<TrialRecord> records;  // sorted by (rho, alpha, trial, algorithm)
    std::vector<ConditionSummary> summaries;
    std::vector<TheoryRow> theory;
    std::size_t generation_failures = 0;
    int exit_code = 0;  // 0 ok, 2 when some condition failed entirely
};

/// Paired trials over the plan grid; every algorithm sees the same instance
/// per cell. Writes trials.csv, summary.csv and theory.csv when output_dir is
/// set. Per-trial failures are recorded, never fatal.
PlanResults run_plan(const ExperimentPlan& plan, std::ostream* log = nullptr);

/// Summaries per (rho, alpha, algorithm) of the given records.
std::vector<ConditionSummary> summarize_records(const std::vector<TrialRecord>& records);

std::vector<TheoryRow> theory_table(const std::vector<double>& rhos, const std::vector<double>& alphas);

struct TimingRow {
    std::size_t k = 0;
    Algorithm algorithm = Algorithm::rfpi;
    std::size_t trials = 0;
    FieldSummary wall_time;
    FieldSummary mse;
    FieldSummary inner_iterations;
};

struct TimingResults {
    std::vector<TimingRow> rows;  // k-major, algorithm order of the plan
    std::vector<TrialRecord> records;
    int exit_code = 0;
};

/// Wall-time comparison at alpha = alphas.front() (3 for the usual M = 3N)
/// and exact support sizes `k_values`, serial to avoid contention. Writes
/// timing.csv when output_dir is set.
TimingResults run_timing_benchmark(const ExperimentPlan& plan, const std::vector<std::size_t>& k_values,
                                   std::ostream* log = nullptr);

struct CavityRow {
    std::uint64_t seed = 0;
    bool converged = false;
    bool degenerate = false;
    int sweeps = 0;
    double final_residual = 0.0;
    std::optional<double> mse;
    std::vector<double> residual_trace;
};

struct CavityResults {
    std::vector<CavityRow> rows;
    double converged_fraction = 0.0;
    int exit_code = 0;
};

/// Naive cavity iteration on `plan.trials` seeds at (rhos.front(),
/// alphas.front()). Writes cavity.csv and cavity_traces.csv when output_dir
/// is set.
CavityResults run_cavity_report(const ExperimentPlan& plan, std::ostream* log = nullptr);

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
void write_summary_csv(const std::filesystem::path& path, const std::vector<ConditionSummary>& summaries,
                       const std::vector<TheoryRow>& theory);
void write_theory_csv(const std::filesystem::path& path, const std::vector<TheoryRow>& rows);
void write_timing_csv(const std::filesystem::path& path, const std::vector<TimingRow>& rows);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace onebit
