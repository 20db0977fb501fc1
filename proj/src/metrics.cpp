#include "onebit/metrics.hpp"

#include <cmath>
#include <vector>

namespace onebit {

double default_zero_tol(std::size_t n) { return 1e-9 * std::sqrt(static_cast<double>(n)); }

TrialMetrics compute_metrics(const Vector& x0, const Vector& x_hat, double zero_tol) {
    if (x0.size() != x_hat.size()) throw std::invalid_argument("compute_metrics: length mismatch");
    const double norm0 = x0.norm();
    const double norm_hat = x_hat.norm();
    if (norm0 == 0.0 || norm_hat == 0.0) throw ZeroVector("compute_metrics: zero vector");

    const Vector u0 = x0 / norm0;
    const Vector u_hat = x_hat / norm_hat;
    TrialMetrics m;
    m.direction_cosine = u0.dot(u_hat);
    m.mse = (u_hat - u0).squaredNorm();
    m.overlap_m = x0.dot(x_hat) / static_cast<double>(x0.size());

    std::size_t zeros = 0, nonzeros = 0, false_pos = 0, false_neg = 0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        const bool estimated_nonzero = std::abs(x_hat[i]) > zero_tol;
        if (estimated_nonzero) ++m.support_size_est;
        if (x0[i] == 0.0) {
            ++zeros;
            if (estimated_nonzero) ++false_pos;
        } else {
            ++nonzeros;
            if (!estimated_nonzero) ++false_neg;
        }
    }
    if (zeros > 0) m.fp = static_cast<double>(false_pos) / static_cast<double>(zeros);
    if (nonzeros > 0) m.fn = static_cast<double>(false_neg) / static_cast<double>(nonzeros);
    return m;
}

FieldSummary summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty sample");
    FieldSummary s;
    s.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
        s.sem = s.std / std::sqrt(static_cast<double>(s.count));
    }
    return s;
}

namespace {

template <class Get>
FieldSummary summarize_field(std::span<const TrialMetrics> records, Get get) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& r : records) {
        if (auto v = get(r)) values.push_back(*v);
    }
    if (values.empty()) return FieldSummary{};
    return summarize(values);
}

}  // namespace

MetricsSummary aggregate(std::span<const TrialMetrics> records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    MetricsSummary s;
    s.trials = records.size();
    s.mse = summarize_field(records, [](const TrialMetrics& r) { return std::optional<double>(r.mse); });
    s.direction_cosine =
        summarize_field(records, [](const TrialMetrics& r) { return std::optional<double>(r.direction_cosine); });
    s.overlap_m = summarize_field(records, [](const TrialMetrics& r) { return std::optional<double>(r.overlap_m); });
    s.fp = summarize_field(records, [](const TrialMetrics& r) { return r.fp; });
    s.fn = summarize_field(records, [](const TrialMetrics& r) { return r.fn; });
    s.support_size_est = summarize_field(
        records, [](const TrialMetrics& r) { return std::optional<double>(static_cast<double>(r.support_size_est)); });
    return s;
}

}  // namespace onebit
