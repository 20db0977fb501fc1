// Command-line driver for the 1-bit compressed sensing experiments.
//
//   onebit_cs --mode run    --rhos 0.125 --alphas 1,2,3 --algos rfpi,cisr --out results/
//   onebit_cs --mode timing --k-values 4,8,16,32 --algos rfpi,cisr,nort --trials 100
//   onebit_cs --mode cavity --rhos 0.125 --alphas 3 --trials 100
//   onebit_cs --theory-only --rhos 0.03125,0.0625,0.125,0.25
//
// A flat key = value file given by --config supplies defaults for any flag;
// flags on the command line take precedence.

#include "onebit/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kConfigError = 1;

}  // namespace

int main(int argc, char** argv) {
    using namespace onebit;
    ExperimentPlan plan;
    std::string mode = "run";
    std::vector<std::string> algos = {"rfpi"};
    std::vector<std::size_t> k_values = {4, 8, 16, 32};
    std::string out_dir = "results";
    bool full = false;
    std::optional<double> tol;

    CLI::App app{"Recovery experiments and replica-symmetric theory for 1-bit compressed sensing"};
    app.set_config("--config", "", "Flat key = value file with defaults for the flags below");
    app.add_option("--mode", mode, "run | timing | cavity")
        ->check(CLI::IsMember({"run", "timing", "cavity"}))
        ->capture_default_str();
    app.add_option("--n", plan.n, "Signal dimension N")->capture_default_str();
    app.add_option("--alphas", plan.alphas, "Measurement ratios M/N")->delimiter(',')->capture_default_str();
    app.add_option("--rhos", plan.rhos, "Signal densities")->delimiter(',')->capture_default_str();
    app.add_option("--trials", plan.trials, "Trials per condition")->capture_default_str();
    app.add_flag("--full", full, "Use 1000 trials per condition");
    app.add_option("--seed", plan.master_seed, "Master seed")->capture_default_str();
    app.add_option("--algos", algos, "rfpi, cisr, nort, naive_cavity")->delimiter(',')->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("--theory-only", plan.theory_only, "Only write the RS theory table");
    app.add_option("--parallelism", plan.parallelism, "Worker threads (0: ONEBIT_CS_THREADS or all cores)")
        ->capture_default_str();
    app.add_option("--delta", plan.rfpi_cfg.delta, "RFPI step size")->capture_default_str();
    app.add_option("--lambda0", plan.rfpi_cfg.lambda0, "RFPI initial lambda")->capture_default_str();
    app.add_option("--lambda-growth", plan.rfpi_cfg.lambda_growth, "RFPI lambda factor per stage")
        ->capture_default_str();
    app.add_option("--b-shrink", plan.cisr_cfg.b_shrink, "CISR B factor per stage")->capture_default_str();
    app.add_option("--initial-b-scale", plan.cisr_cfg.initial_b_scale, "CISR initial B over the single-survivor B")
        ->capture_default_str();
    app.add_option("--tol", tol, "Inner and outer tolerance for RFPI and CISR");
    app.add_option("--k-values", k_values, "Support sizes for --mode timing")->delimiter(',')->capture_default_str();
    app.add_flag("--bernoulli", plan.bernoulli_support, "Sample the support Bernoulli(rho) instead of exactly rho*N");
    app.add_option("--zero-tol", plan.zero_tol, "Support threshold for FP/FN")->capture_default_str();
    app.add_option("--max-sweeps", plan.cavity_max_sweeps, "Naive cavity sweep cap")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        plan.algorithms.clear();
        for (const auto& a : algos) plan.algorithms.push_back(parse_algorithm(a));
        if (full) plan.trials = 1000;
        if (tol) {
            plan.rfpi_cfg.inner_tol = plan.rfpi_cfg.outer_tol = *tol;
            plan.cisr_cfg.inner_tol = plan.cisr_cfg.outer_tol = *tol;
        }
        plan.output_dir = out_dir;
        plan.validate();
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (mode == "timing") {
            plan.parallelism = 1;
            return run_timing_benchmark(plan, k_values, &std::cerr).exit_code;
        }
        if (mode == "cavity") return run_cavity_report(plan, &std::cerr).exit_code;
        const PlanResults r = run_plan(plan, &std::cerr);
        for (const auto& s : r.summaries)
            std::cout << "rho=" << s.rho << " alpha=" << s.alpha << " " << algorithm_name(s.algorithm)
                      << " mse=" << s.metrics.mse.mean << " (" << s.trials << " runs, " << s.failed << " failed)\n";
        return r.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
