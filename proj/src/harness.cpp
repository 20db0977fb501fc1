#include "onebit/harness.hpp"

#include "onebit/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace onebit {

namespace {

constexpr std::uint64_t kTimingStream = 0x7157;

// Runs task(i) for i in [0, count) on `workers` threads. Each task writes
// only its own output slot, so no locking is needed.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) task(i);
        });
}

std::ofstream open_csv(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

SignalParams signal_params(const ExperimentPlan& plan, double rho) {
    SignalParams sp;
    sp.n = plan.n;
    sp.rho = rho;
    if (!plan.bernoulli_support) sp.k_exact = support_size(plan.n, rho);
    return sp;
}

void log_line(std::ostream* log, const std::string& text) {
    if (log) *log << text << '\n' << std::flush;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::rfpi: return "rfpi";
        case Algorithm::cisr: return "cisr";
        case Algorithm::nort: return "nort";
        case Algorithm::naive_cavity: return "naive_cavity";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : {Algorithm::rfpi, Algorithm::cisr, Algorithm::nort, Algorithm::naive_cavity})
        if (algorithm_name(a) == name) return a;
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

void ExperimentPlan::validate() const {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (alphas.empty() || rhos.empty()) throw std::invalid_argument("alphas and rhos must be nonempty");
    for (double a : alphas)
        if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("alphas must be positive");
    for (double r : rhos)
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("rhos must lie in (0, 1)");
    if (!theory_only && algorithms.empty()) throw std::invalid_argument("no algorithms selected");
    // Two copies of the folded matrix plus the raw one, in doubles.
    const double bytes = 3.0 * 8.0 * static_cast<double>(n) * static_cast<double>(n) *
                         *std::max_element(alphas.begin(), alphas.end());
    if (bytes > 4e9) throw std::invalid_argument("n * max(alphas) exceeds the memory budget");
    if (parallelism < 0) throw std::invalid_argument("parallelism must be non-negative");
    if (!(zero_tol >= 0.0)) throw std::invalid_argument("zero_tol must be non-negative");
    if (cavity_max_sweeps < 1 || !(cavity_tol > 0.0)) throw std::invalid_argument("bad cavity settings");
    rfpi_cfg.validate();
    cisr_cfg.validate();
}

int resolve_parallelism(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ONEBIT_CS_THREADS")) {
        int v = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t support_size(std::size_t n, double rho) {
    const auto k = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t rho_index, std::size_t alpha_index, int t) {
    return derive_seed(master_seed, {rho_index, alpha_index, static_cast<std::uint64_t>(t)});
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

TrialRecord run_trial(const ProblemInstance& instance, Algorithm algorithm, const ExperimentPlan& plan, double rho,
                      int trial) {
    TrialRecord rec;
    rec.rho = rho;
    rec.alpha = instance.alpha;
    rec.trial = trial;
    rec.algorithm = algorithm;
    rec.seed = instance.seed;
    try {
        const FoldedInstance folded = fold_signs(instance.phi, instance.y);
        const std::size_t k_prior = std::max<std::size_t>(1, (instance.x0.array() != 0.0).count());
        RecoveryResult r;
        switch (algorithm) {
            case Algorithm::rfpi:
                r = rfpi_recover(folded, plan.rfpi_cfg, random_sphere_point(instance.n(), instance.seed));
                break;
            case Algorithm::cisr:
            case Algorithm::nort: {
                CisrConfig cfg = plan.cisr_cfg;
                cfg.onsager_enabled = algorithm == Algorithm::cisr;
                r = cisr_recover(folded, cfg, k_prior);
                break;
            }
            case Algorithm::naive_cavity:
                r = naive_cavity_recover(folded, k_prior, plan.cavity_max_sweeps, plan.cavity_tol).result;
                break;
        }
        rec.wall_time = r.wall_time;
        rec.x_hat_norm = r.x_hat.norm();
        rec.inner_iterations = r.inner_iterations_total;
        rec.outer_iterations = r.outer_iterations;
        rec.converged = r.converged;
        rec.restarts = r.restarts;
        rec.metrics = compute_metrics(instance.x0, r.x_hat, plan.zero_tol);
    } catch (const std::exception& e) {
        rec.converged = false;
        rec.metrics.reset();
        rec.error = e.what();
    }
    return rec;
}

std::vector<ConditionSummary> summarize_records(const std::vector<TrialRecord>& records) {
    using Key = std::tuple<double, double, int>;
    std::map<Key, std::vector<const TrialRecord*>> groups;
    for (const auto& r : records) groups[{r.rho, r.alpha, static_cast<int>(r.algorithm)}].push_back(&r);

    std::vector<ConditionSummary> out;
    for (const auto& [key, group] : groups) {
        ConditionSummary s;
        s.rho = std::get<0>(key);
        s.alpha = std::get<1>(key);
        s.algorithm = static_cast<Algorithm>(std::get<2>(key));
        std::vector<TrialMetrics> metrics;
        std::vector<double> times, iters;
        for (const TrialRecord* r : group) {
            if (!r->metrics) {
                ++s.failed;
                continue;
            }
            metrics.push_back(*r->metrics);
            times.push_back(r->wall_time);
            iters.push_back(static_cast<double>(r->inner_iterations));
            if (r->converged) ++s.converged;
        }
        s.trials = metrics.size();
        if (!metrics.empty()) {
            s.metrics = aggregate(metrics);
            s.wall_time = summarize(times);
            s.inner_iterations = summarize(iters);
        }
        out.push_back(s);
    }
    return out;
}

std::vector<TheoryRow> theory_table(const std::vector<double>& rhos, const std::vector<double>& alphas) {
    std::vector<TheoryRow> rows;
    for (double rho : rhos) {
        const auto points = rs_sweep(rho, alphas);
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            TheoryRow row{rho, alphas[i], points[i], std::nullopt};
            if (points[i].converged) row.prediction = rs_predict(points[i], RSParams{alphas[i], rho});
            rows.push_back(row);
        }
    }
    return rows;
}

PlanResults run_plan(const ExperimentPlan& plan, std::ostream* log) {
    plan.validate();
    PlanResults results;
    results.theory = theory_table(plan.rhos, plan.alphas);
    if (!plan.output_dir.empty()) write_theory_csv(plan.output_dir / "theory.csv", results.theory);
    if (plan.theory_only) return results;

    const std::size_t na = plan.alphas.size();
    const std::size_t cells = plan.rhos.size() * na * static_cast<std::size_t>(plan.trials);
    std::vector<std::vector<TrialRecord>> slots(cells);
    std::vector<char> gen_failed(cells, 0);

    const int workers = resolve_parallelism(plan.parallelism);
    log_line(log, "running " + std::to_string(cells) + " trials on " + std::to_string(workers) + " worker(s)");
    std::atomic<std::size_t> done{0};
    parallel_for(cells, workers, [&](std::size_t idx) {
        const std::size_t ri = idx / (na * plan.trials);
        const std::size_t ai = (idx / plan.trials) % na;
        const int t = static_cast<int>(idx % plan.trials);
        const double rho = plan.rhos[ri];
        try {
            const ProblemInstance inst =
                make_instance(signal_params(plan, rho), plan.alphas[ai], trial_seed(plan.master_seed, ri, ai, t));
            for (Algorithm a : plan.algorithms) slots[idx].push_back(run_trial(inst, a, plan, rho, t));
        } catch (const std::exception&) {
            gen_failed[idx] = 1;
        }
        const std::size_t d = ++done;
        if (log && d % 100 == 0) log_line(log, "  " + std::to_string(d) + "/" + std::to_string(cells));
    });

    for (std::size_t idx = 0; idx < cells; ++idx) {
        if (gen_failed[idx]) {
            ++results.generation_failures;
            log_line(log, "instance generation failed for cell " + std::to_string(idx));
        }
        for (auto& r : slots[idx]) results.records.push_back(std::move(r));
    }
    results.summaries = summarize_records(results.records);

    // A (rho, alpha, algorithm) condition fails entirely when no run produced
    // an estimate, including when every instance failed to generate.
    std::size_t expected = plan.rhos.size() * na * plan.algorithms.size();
    std::size_t healthy = 0;
    for (const auto& s : results.summaries)
        if (s.trials > 0) ++healthy;
    results.exit_code = healthy == expected ? 0 : 2;

    if (!plan.output_dir.empty()) {
        write_trials_csv(plan.output_dir / "trials.csv", results.records);
        write_summary_csv(plan.output_dir / "summary.csv", results.summaries, results.theory);
    }
    return results;
}

TimingResults run_timing_benchmark(const ExperimentPlan& plan, const std::vector<std::size_t>& k_values,
                                   std::ostream* log) {
    plan.validate();
    if (k_values.empty()) throw std::invalid_argument("timing benchmark needs at least one K");
    TimingResults out;
    const double alpha = plan.alphas.front();
    for (std::size_t k : k_values) {
        if (k < 1 || k > plan.n) throw std::invalid_argument("K must lie in [1, n]");
        SignalParams sp;
        sp.n = plan.n;
        sp.rho = static_cast<double>(k) / static_cast<double>(plan.n);
        sp.k_exact = k;
        std::map<int, std::vector<const TrialRecord*>> by_algo;
        const std::size_t first = out.records.size();
        for (int t = 0; t < plan.trials; ++t) {
            try {
                const ProblemInstance inst =
                    make_instance(sp, alpha, derive_seed(plan.master_seed, {kTimingStream, k, std::uint64_t(t)}));
                for (Algorithm a : plan.algorithms) out.records.push_back(run_trial(inst, a, plan, sp.rho, t));
            } catch (const std::exception& e) {
                log_line(log, std::string("instance generation failed: ") + e.what());
            }
        }
        for (std::size_t i = first; i < out.records.size(); ++i)
            by_algo[static_cast<int>(out.records[i].algorithm)].push_back(&out.records[i]);
        for (Algorithm a : plan.algorithms) {
            TimingRow row;
            row.k = k;
            row.algorithm = a;
            std::vector<double> times, mses, iters;
            for (const TrialRecord* r : by_algo[static_cast<int>(a)]) {
                if (!r->metrics) continue;
                times.push_back(r->wall_time);
                mses.push_back(r->metrics->mse);
                iters.push_back(static_cast<double>(r->inner_iterations));
            }
            row.trials = times.size();
            if (!times.empty()) {
                row.wall_time = summarize(times);
                row.mse = summarize(mses);
                row.inner_iterations = summarize(iters);
            } else {
                out.exit_code = 2;
            }
            log_line(log, "K=" + std::to_string(k) + " " + std::string(algorithm_name(a)) +
                              " mean time " + format_double(row.wall_time.mean) + " s");
            out.rows.push_back(row);
        }
    }
    if (!plan.output_dir.empty()) write_timing_csv(plan.output_dir / "timing.csv", out.rows);
    return out;
}

CavityResults run_cavity_report(const ExperimentPlan& plan, std::ostream* log) {
    plan.validate();
    CavityResults out;
    const double rho = plan.rhos.front();
    const double alpha = plan.alphas.front();
    const SignalParams sp = signal_params(plan, rho);
    std::size_t converged = 0;
    for (int t = 0; t < plan.trials; ++t) {
        CavityRow row;
        row.seed = trial_seed(plan.master_seed, 0, 0, t);
        try {
            const ProblemInstance inst = make_instance(sp, alpha, row.seed);
            row.seed = inst.seed;
            const std::size_t k = std::max<std::size_t>(1, (inst.x0.array() != 0.0).count());
            const CavityReport rep =
                naive_cavity_recover(fold_signs(inst.phi, inst.y), k, plan.cavity_max_sweeps, plan.cavity_tol);
            row.converged = rep.result.converged;
            row.degenerate = rep.degenerate;
            row.sweeps = static_cast<int>(rep.residual_trace.size());
            row.final_residual = rep.residual_trace.empty() ? std::nan("") : rep.residual_trace.back();
            row.residual_trace = rep.residual_trace;
            if (rep.result.x_hat.allFinite() && rep.result.x_hat.squaredNorm() > 0.0)
                row.mse = compute_metrics(inst.x0, rep.result.x_hat, plan.zero_tol).mse;
        } catch (const std::exception& e) {
            row.degenerate = true;
            log_line(log, std::string("cavity seed failed: ") + e.what());
        }
        if (row.converged) ++converged;
        out.rows.push_back(std::move(row));
    }
    out.converged_fraction = static_cast<double>(converged) / static_cast<double>(plan.trials);
    log_line(log, "naive cavity converged on " + std::to_string(converged) + "/" + std::to_string(plan.trials) +
                      " seeds");

    if (!plan.output_dir.empty()) {
        auto f = open_csv(plan.output_dir / "cavity.csv");
        f << "seed,converged,degenerate,sweeps,final_residual,mse\n";
        for (const auto& r : out.rows)
            f << r.seed << ',' << int(r.converged) << ',' << int(r.degenerate) << ',' << r.sweeps << ','
              << format_double(r.final_residual) << ',' << opt(r.mse) << '\n';
        auto g = open_csv(plan.output_dir / "cavity_traces.csv");
        g << "seed,sweep,residual\n";
        for (const auto& r : out.rows)
            for (std::size_t s = 0; s < r.residual_trace.size(); ++s)
                g << r.seed << ',' << s + 1 << ',' << format_double(r.residual_trace[s]) << '\n';
    }
    return out;
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
    auto f = open_csv(path);
    f << "rho,alpha,trial,algorithm,seed,mse,cosine,overlap_m,fp,fn,converged,outer_iters,inner_iters,restarts,"
         "wall_time_s\n";
    for (const auto& r : records) {
        f << format_double(r.rho) << ',' << format_double(r.alpha) << ',' << r.trial << ','
          << algorithm_name(r.algorithm) << ',' << r.seed << ',';
        if (r.metrics)
            f << format_double(r.metrics->mse) << ',' << format_double(r.metrics->direction_cosine) << ','
              << format_double(r.metrics->overlap_m) << ',' << opt(r.metrics->fp) << ',' << opt(r.metrics->fn);
        else
            f << ",,,,";
        f << ',' << int(r.converged) << ',' << r.outer_iterations << ',' << r.inner_iterations << ',' << r.restarts
          << ',' << format_double(r.wall_time) << '\n';
    }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<ConditionSummary>& summaries,
                       const std::vector<TheoryRow>& theory) {
    auto f = open_csv(path);
    f << "rho,alpha,algorithm,trials,failed,converged,mse_mean,mse_std,mse_sem,cosine_mean,cosine_std,"
         "overlap_m_mean,fp_mean,fp_std,fn_mean,fn_std,inner_iters_mean,wall_time_mean_s,wall_time_std_s,"
         "theory_mse,theory_fp,theory_fn\n";
    for (const auto& s : summaries) {
        const RSPrediction* pred = nullptr;
        for (const auto& t : theory)
            if (t.rho == s.rho && t.alpha == s.alpha && t.prediction) pred = &*t.prediction;
        const auto& m = s.metrics;
        f << format_double(s.rho) << ',' << format_double(s.alpha) << ',' << algorithm_name(s.algorithm) << ','
          << s.trials << ',' << s.failed << ',' << s.converged << ',';
        if (s.trials > 0) {
            f << format_double(m.mse.mean) << ',' << format_double(m.mse.std) << ',' << format_double(m.mse.sem)
              << ',' << format_double(m.direction_cosine.mean) << ',' << format_double(m.direction_cosine.std)
              << ',' << format_double(m.overlap_m.mean) << ',';
            f << (m.fp.count ? format_double(m.fp.mean) : "") << ',' << (m.fp.count ? format_double(m.fp.std) : "")
              << ',' << (m.fn.count ? format_double(m.fn.mean) : "") << ','
              << (m.fn.count ? format_double(m.fn.std) : "") << ',';
            f << format_double(s.inner_iterations.mean) << ',' << format_double(s.wall_time.mean) << ','
              << format_double(s.wall_time.std) << ',';
        } else {
            f << ",,,,,,,,,,,,,";
        }
        if (pred)
            f << format_double(pred->mse) << ',' << format_double(pred->fp) << ',' << format_double(pred->fn);
        else
            f << ",,";
        f << '\n';
    }
}

void write_theory_csv(const std::filesystem::path& path, const std::vector<TheoryRow>& rows) {
    auto f = open_csv(path);
    f << "rho,alpha,m,chi,q_hat,m_hat,q_big_hat,mse,fp,fn,at_lhs,stable,converged\n";
    for (const auto& r : rows) {
        const auto& p = r.point;
        f << format_double(r.rho) << ',' << format_double(r.alpha) << ',' << format_double(p.m) << ','
          << format_double(p.chi) << ',' << format_double(p.q_hat) << ',' << format_double(p.m_hat) << ','
          << format_double(p.q_big_hat) << ',';
        if (r.prediction)
            f << format_double(r.prediction->mse) << ',' << format_double(r.prediction->fp) << ','
              << format_double(r.prediction->fn) << ',' << format_double(r.prediction->at_lhs) << ','
              << int(r.prediction->stable_rs);
        else
            f << ",,,,";
        f << ',' << int(p.converged) << '\n';
    }
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<TimingRow>& rows) {
    auto f = open_csv(path);
    f << "k,algorithm,trials,wall_time_mean_s,wall_time_std_s,mse_mean,inner_iters_mean\n";
    for (const auto& r : rows)
        f << r.k << ',' << algorithm_name(r.algorithm) << ',' << r.trials << ',' << format_double(r.wall_time.mean)
          << ',' << format_double(r.wall_time.std) << ',' << format_double(r.mse.mean) << ','
          << format_double(r.inner_iterations.mean) << '\n';
}

}  // namespace onebit
