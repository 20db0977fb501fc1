// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. ONEBIT_ACCEPTANCE_TRIALS scales the trial counts down for
// quick local runs; the printed header states when that is in effect.

#include "onebit/core_math.hpp"
#include "onebit/harness.hpp"
#include "onebit/metrics.hpp"
#include "onebit/recovery.hpp"
#include "onebit/theory.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace onebit;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void fail(const std::string& why) {
        pass = false;
        detail << " [" << why << "]";
    }
};

int g_failures = 0;
std::map<int, std::string> g_lines;

void report(int id, const std::string& title, const Verdict& v) {
    const std::string line = "A" + std::to_string(id) + " " + (v.pass ? "PASS" : "FAIL") + ": " + title + ":" + v.detail.str();
    std::cout << line << std::endl;
    g_lines[id] = line;
    if (!v.pass) ++g_failures;
}

int trials_or(int standard) {
    if (const char* env = std::getenv("ONEBIT_ACCEPTANCE_TRIALS")) {
        const int v = std::atoi(env);
        if (v > 0) return std::min(v, standard);
    }
    return standard;
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

const std::vector<double> kGridRhos = {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4};

std::vector<double> grid_alphas() {
    std::vector<double> a;
    for (int i = 1; i <= 12; ++i) a.push_back(0.5 * i);
    return a;
}

const ConditionSummary* find_summary(const PlanResults& r, double rho, double alpha, Algorithm a) {
    for (const auto& s : r.summaries)
        if (s.rho == rho && s.alpha == alpha && s.algorithm == a) return &s;
    return nullptr;
}

// 1 and 3 share the grid solve.
void criteria_1_and_3() {
    Verdict v1, v3;
    double worst_residual = 0.0, worst_grad = 0.0, min_at = 1e300;
    int points = 0;
    for (double rho : kGridRhos) {
        for (double alpha : grid_alphas()) {
            const RSParams p{alpha, rho};
            const RSFixedPoint fp = rs_solve(p);
            ++points;
            const std::string where = "rho=" + fmt(rho) + " alpha=" + fmt(alpha);
            if (!fp.converged || !(fp.residual < 1e-12)) {
                v1.fail("no convergence at " + where);
                v3.fail("no fixed point at " + where);
                continue;
            }
            worst_residual = std::max(worst_residual, fp.residual);
            oracle::Vec5 x;
            x << fp.chi, fp.m, fp.q_hat, fp.m_hat, fp.q_big_hat;
            const double g = oracle::fd_gradient(x, p).cwiseAbs().maxCoeff();
            worst_grad = std::max(worst_grad, g);
            if (!(g < 1e-5)) v1.fail("stationarity " + fmt(g) + " at " + where);
            const RSStability st = rs_stability(fp, p);
            min_at = std::min(min_at, st.at_lhs);
            if (st.stable) v3.fail("stable at " + where);
        }
    }
    v1.detail << " " << points << " points, max residual " << fmt(worst_residual) << ", max |dF| "
              << fmt(worst_grad) << " (tol 1e-12 / 1e-5)";
    v3.detail << " " << points << " points, min AT lhs " << fmt(min_at) << " (unstable iff > 0)";
    report(1, "RS solver convergence and stationarity on the 4x12 grid", v1);
    report(3, "RS solution AT-unstable at every grid point", v3);
}

void criterion_2() {
    Verdict v;
    for (const RSParams p : {RSParams{2.0, 0.125}, RSParams{3.0, 0.25}, RSParams{5.0, 0.0625}}) {
        const RSFixedPoint fp = rs_solve(p);
        const oracle::ExtremumResult ex = oracle::extremize_by_continuation(p);
        const double diff = std::abs(ex.point[1] - fp.m);
        v.detail << " (" << fmt(p.alpha) << "," << fmt(p.rho) << "): |dm|=" << fmt(diff, 3);
        if (!fp.converged || !ex.converged) v.fail("solver or extremization did not converge");
        if (!(diff <= 1e-4)) v.fail("m differs by " + fmt(diff));
    }
    v.detail << " (tol 1e-4)";
    report(2, "RS solver agrees with direct free-energy extremization", v);
}

void criteria_4_5_and_9(const PlanResults& plan_results, const ExperimentPlan& plan) {
    Verdict v4;
    for (double rho : plan.rhos) {
        for (double alpha : plan.alphas) {
            const ConditionSummary* s = find_summary(plan_results, rho, alpha, Algorithm::rfpi);
            const std::string where = "rho=" + fmt(rho) + " alpha=" + fmt(alpha);
            const RSPrediction pr = rs_predict(RSParams{alpha, rho});
            if (!s || s->trials == 0) {
                v4.fail("no RFPI trials at " + where);
                continue;
            }
            const double diff = std::abs(s->metrics.mse.mean - pr.mse);
            v4.detail << " " << where << ": exp " << fmt(s->metrics.mse.mean) << " th " << fmt(pr.mse) << ";";
            if (!(diff <= 0.05)) v4.fail("|diff| " + fmt(diff) + " at " + where);
        }
    }
    v4.detail << " (tol 0.05, " << plan.trials << " trials, exactly round(rho N) nonzeros)";
    report(4, "RFPI mean MSE matches the RS prediction", v4);

    // The RS average is over i.i.d. Bernoulli(rho) supports. Show the
    // weakest cell under that ensemble too; this does not affect the verdict.
    ExperimentPlan bern = plan;
    bern.rhos = {0.25};
    bern.alphas = {1.0};
    bern.algorithms = {Algorithm::rfpi};
    bern.bernoulli_support = true;
    const PlanResults br = run_plan(bern);
    if (const ConditionSummary* s = find_summary(br, 0.25, 1.0, Algorithm::rfpi)) {
        std::cout << "INFO RFPI at rho=1/4 alpha=1 with Bernoulli support: exp " << fmt(s->metrics.mse.mean) << " (sem "
                  << fmt(s->metrics.mse.sem, 2) << ") th " << fmt(rs_predict(RSParams{1.0, 0.25}).mse) << std::endl;
    }

    Verdict v5;
    for (double alpha : {2.0, 3.0, 4.0}) {
        const ConditionSummary* r = find_summary(plan_results, 0.25, alpha, Algorithm::rfpi);
        const ConditionSummary* c = find_summary(plan_results, 0.25, alpha, Algorithm::cisr);
        if (!r || !c || r->trials == 0 || c->trials == 0) {
            v5.fail("missing trials at alpha=" + fmt(alpha));
            continue;
        }
        v5.detail << " alpha=" << fmt(alpha) << ": CISR " << fmt(c->metrics.mse.mean) << " RFPI "
                  << fmt(r->metrics.mse.mean) << ";";
        if (!(c->metrics.mse.mean <= r->metrics.mse.mean + 0.02)) v5.fail("CISR worse at alpha=" + fmt(alpha));
    }
    v5.detail << " (margin 0.02, rho=1/4)";
    report(5, "CISR mean MSE no worse than RFPI", v5);

    // Qualitative FP/FN comparison; informational only.
    std::cout << "INFO FP/FN at rho=1/4 (RFPI vs CISR):";
    for (double alpha : {2.0, 3.0, 4.0}) {
        const ConditionSummary* r = find_summary(plan_results, 0.25, alpha, Algorithm::rfpi);
        const ConditionSummary* c = find_summary(plan_results, 0.25, alpha, Algorithm::cisr);
        if (!r || !c) continue;
        std::cout << " alpha=" << fmt(alpha) << " fp " << fmt(r->metrics.fp.mean, 3) << "/" << fmt(c->metrics.fp.mean, 3)
                  << " fn " << fmt(r->metrics.fn.mean, 3) << "/" << fmt(c->metrics.fn.mean, 3) << ";";
    }
    std::cout << std::endl;

    // 9: property checks. Unit tests cover these in depth; here they run on
    // the acceptance data and on fresh probes.
    Verdict v9;
    std::size_t norm_checked = 0, metric_checked = 0;
    for (const auto& rec : plan_results.records) {
        if (rec.converged && rec.metrics) {
            ++norm_checked;
            if (!(std::abs(rec.x_hat_norm - std::sqrt(static_cast<double>(plan.n))) <= 1e-9))
                v9.fail("norm off in trial " + std::to_string(rec.trial));
        }
        if (rec.metrics) {
            ++metric_checked;
            if (!(std::abs(rec.metrics->mse + 2.0 * rec.metrics->direction_cosine - 2.0) <= 1e-12))
                v9.fail("mse + 2 cos != 2 in trial " + std::to_string(rec.trial));
        }
    }
    v9.detail << " norm on " << norm_checked << " converged runs, metric identity on " << metric_checked << " runs;";

    double fd_worst = 0.0;
    for (double u = -3.0; u <= 3.0; u += 0.0137) {
        const double h = 1e-6;
        if (std::abs(u) > 1e-3)
            fd_worst = std::max(fd_worst, std::abs((f_pot(u + h) - f_pot(u - h)) / (2 * h) - f_prime(u)));
        if (std::abs(std::abs(u) - 1.0) > 1e-3)
            fd_worst = std::max(fd_worst, std::abs((g_pot(u + h) - g_pot(u - h)) / (2 * h) - g_prime(u)));
    }
    if (!(fd_worst < 1e-5)) v9.fail("finite-difference mismatch " + fmt(fd_worst));
    v9.detail << " FD max err " << fmt(fd_worst, 2) << ";";

    double phi_worst = 0.0;
    for (double q : {0.5, 1.0, 2.0}) {
        for (double w = -4.0; w <= 4.0 + 1e-12; w += 0.25) {
            double best = 0.0;
            for (long j = -200000; j <= 200000; ++j) {
                const double x = 1e-4 * static_cast<double>(j);
                best = std::min(best, 0.5 * q * x * x - w * x + std::abs(x));
            }
            phi_worst = std::max(phi_worst, std::abs(phi(w, q) - best));
        }
    }
    if (!(phi_worst <= 1e-6)) v9.fail("phi brute force mismatch " + fmt(phi_worst));
    v9.detail << " phi brute-force max err " << fmt(phi_worst, 2) << ";";

    SignalParams sp;
    sp.n = 128;
    sp.rho = 0.125;
    sp.k_exact = 16;
    const ProblemInstance inst = make_instance(sp, 3.0, 4242);
    const FoldedInstance folded = fold_signs(inst.phi, inst.y);
    const FoldedOperator op(folded.phi_folded);
    double ortho_worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Vector x = random_sphere_point(128, s);
        const Vector g = constraint_gradient(op, x);
        ortho_worst = std::max(ortho_worst, std::abs(tangent_projection(g, x).dot(x)) / (g.norm() * x.norm()));
    }
    if (!(ortho_worst < 1e-12)) v9.fail("tangent projection not orthogonal");
    v9.detail << " tangent |cos| max " << fmt(ortho_worst, 2) << ";";

    const Vector start = random_sphere_point(128, 7);
    const bool same_rfpi = rfpi_recover(inst, plan.rfpi_cfg, start).x_hat == rfpi_recover(inst, plan.rfpi_cfg, start).x_hat;
    const bool same_cisr = cisr_recover(inst, plan.cisr_cfg, 16).x_hat == cisr_recover(inst, plan.cisr_cfg, 16).x_hat;
    const bool same_instance = make_instance(sp, 3.0, 4242).phi == inst.phi;
    if (!(same_rfpi && same_cisr && same_instance)) v9.fail("rerun not bitwise identical");
    v9.detail << " reruns bitwise identical: " << (same_rfpi && same_cisr && same_instance ? "yes" : "no");
    report(9, "property checks", v9);
}

void criteria_6_and_7() {
    ExperimentPlan plan;
    plan.n = 128;
    plan.alphas = {3.0};
    plan.rhos = {0.125};
    plan.trials = trials_or(100);
    plan.algorithms = {Algorithm::rfpi, Algorithm::cisr, Algorithm::nort};
    plan.parallelism = 1;
    const TimingResults t = run_timing_benchmark(plan, {4, 8, 16, 32});

    std::map<std::size_t, std::map<Algorithm, double>> mean;
    for (const auto& row : t.rows) mean[row.k][row.algorithm] = row.wall_time.mean;

    Verdict v6, v7;
    for (auto& [k, m] : mean) {
        const double rfpi = m[Algorithm::rfpi], cisr = m[Algorithm::cisr], nort = m[Algorithm::nort];
        v6.detail << " K=" << k << ": RFPI/CISR " << fmt(rfpi / cisr, 4) << ";";
        v7.detail << " K=" << k << ": NORT/CISR " << fmt(nort / cisr, 3) << ";";
        if (!(cisr <= 0.1 * rfpi)) v6.fail("ratio below 10 at K=" + std::to_string(k));
        if (!(nort >= cisr)) v7.fail("NORT faster than CISR at K=" + std::to_string(k));
    }
    v6.detail << " (" << plan.trials << " trials, need >= 10)";
    v7.detail << " (" << plan.trials << " trials, need >= 1.0)";
    report(6, "CISR at least 10x faster than RFPI", v6);
    report(7, "Onsager term does not slow CISR down (NORT time >= CISR time)", v7);
}

void criterion_8() {
    Verdict v;
    for (double rho : kGridRhos) {
        const RSPrediction pr = rs_predict(RSParams{6.0, rho});
        v.detail << " th fp(rho=" << fmt(rho) << ")=" << fmt(pr.fp, 3) << ";";
        if (!(pr.fp > 0.01)) v.fail("theory fp <= 0.01 at rho=" + fmt(rho));
    }
    ExperimentPlan plan;
    plan.alphas = {6.0};
    plan.rhos = {0.125};
    plan.trials = trials_or(200);
    plan.algorithms = {Algorithm::rfpi};
    const PlanResults r = run_plan(plan);
    const ConditionSummary* s = find_summary(r, 0.125, 6.0, Algorithm::rfpi);
    if (!s || s->metrics.fp.count == 0) {
        v.fail("no RFPI fp measurements");
    } else {
        v.detail << " RFPI fp at alpha=6, rho=1/8: " << fmt(s->metrics.fp.mean, 3) << " over " << s->trials
                 << " trials (zero_tol " << plan.zero_tol << ")";
        if (!(s->metrics.fp.mean > 0.0)) v.fail("empirical fp is zero");
    }
    report(8, "false positives persist at alpha = 6", v);
}

void criterion_10() {
    ExperimentPlan plan;
    plan.alphas = {3.0};
    plan.rhos = {0.125};
    plan.trials = trials_or(100);
    plan.cavity_max_sweeps = 500;
    Verdict v;
    try {
        const CavityResults c = run_cavity_report(plan);
        std::size_t degenerate = 0, flagged = 0;
        for (const auto& row : c.rows) {
            degenerate += row.degenerate;
            if (!row.converged) ++flagged;
            if (row.residual_trace.empty() && !row.degenerate) v.fail("missing residual trace");
            if (row.converged && row.degenerate) v.fail("row both converged and degenerate");
        }
        if (c.rows.size() != static_cast<std::size_t>(plan.trials)) v.fail("row count mismatch");
        v.detail << " " << c.rows.size() << " seeds, converged fraction " << fmt(c.converged_fraction, 3) << ", "
                 << flagged << " flagged non-converged (" << degenerate << " degenerate)";
    } catch (const std::exception& e) {
        v.fail(std::string("threw: ") + e.what());
    }
    report(10, "naive cavity iteration report terminates cleanly", v);
}

}  // namespace

int main() {
    if (std::getenv("ONEBIT_ACCEPTANCE_TRIALS"))
        std::cout << "NOTE ONEBIT_ACCEPTANCE_TRIALS is set; trial counts are reduced" << std::endl;

    criteria_1_and_3();
    criterion_2();

    ExperimentPlan plan;
    plan.alphas = {1.0, 2.0, 3.0, 4.0};
    plan.rhos = {0.125, 0.25};
    plan.trials = trials_or(200);
    plan.algorithms = {Algorithm::rfpi, Algorithm::cisr};
    const PlanResults results = run_plan(plan);
    criteria_4_5_and_9(results, plan);

    criteria_6_and_7();
    criterion_8();
    criterion_10();

    std::cout << "\nSUMMARY" << std::endl;
    for (const auto& [id, line] : g_lines) std::cout << line << std::endl;
    std::cout << (g_failures == 0 ? "ALL CRITERIA PASS" : std::to_string(g_failures) + " CRITERIA FAILED") << std::endl;
    return g_failures == 0 ? 0 : 1;
}
