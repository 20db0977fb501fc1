#pragma once

#include "onebit/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>

namespace onebit {

struct TrialMetrics {
    double mse = 0.0;               // ‖x̂/‖x̂‖ − x⁰/‖x⁰‖‖²
    double direction_cosine = 0.0;  // x⁰·x̂ / (‖x⁰‖‖x̂‖)
    double overlap_m = 0.0;         // x⁰·x̂ / N
    std::optional<double> fp;       // absent when x⁰ has no zero entries
    std::optional<double> fn;       // absent when x⁰ has no nonzero entries
    std::size_t support_size_est = 0;
};

class ZeroVector : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Default support tolerance, 1e-9·√N.
double default_zero_tol(std::size_t n);

/// Scale-free comparison of an estimate against the ground truth. Entries
/// of x̂ with |x̂_i| <= zero_tol count as zero. Throws ZeroVector.
TrialMetrics compute_metrics(const Vector& x0, const Vector& x_hat, double zero_tol);

struct FieldSummary {
    double mean = 0.0;
    double std = 0.0;     // sample std (n−1 denominator); 0 when count == 1
    double sem = 0.0;     // standard error, std / √count
    std::size_t count = 0;
};

struct MetricsSummary {
    std::size_t trials = 0;
    FieldSummary mse, direction_cosine, overlap_m, fp, fn, support_size_est;
};

/// Mean, sample standard deviation and standard error of a sample.
/// Throws std::invalid_argument on an empty sample.
FieldSummary summarize(std::span<const double> values);

/// Per-field summaries; fp/fn are summarized over the records where they
/// are present. Throws std::invalid_argument on an empty input.
MetricsSummary aggregate(std::span<const TrialMetrics> records);

}  // namespace onebit
