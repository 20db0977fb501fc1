#pragma once

// Problem instances for 1-bit compressed sensing: a sparse Gaussian signal,
// an i.i.d. N(0, 1/N) measurement matrix and the sign of each measurement.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace onebit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SignalParams {
    std::size_t n = 128;
    double rho = 0.125;
    /// Exact support size; overrides Bernoulli(rho) sampling when set.
    std::optional<std::size_t> k_exact;

    void validate() const;
};

/// A measurement (Φ x⁰)_μ came out exactly zero, so its sign is undefined.
class ZeroMeasurement : public std::runtime_error {
public:
    explicit ZeroMeasurement(std::size_t row)
        : std::runtime_error("measurement " + std::to_string(row) + " is exactly zero"), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

struct ProblemInstance {
    Vector x0;
    Matrix phi;  // M x N, rows indexed by measurement
    Vector y;    // entries are exactly +1 or -1
    std::uint64_t seed = 0;
    double alpha = 0.0;

    std::size_t n() const { return static_cast<std::size_t>(phi.cols()); }
    std::size_t m() const { return static_cast<std::size_t>(phi.rows()); }
};

/// Measurement matrix with every row multiplied by its sign, so the
/// consistency constraint reads Φᶠ x > 0.
struct FoldedInstance {
    Matrix phi_folded;
};

/// Sparse signal: entries are 0 w.p. 1-rho, else N(0,1); or exactly
/// k_exact uniformly placed N(0,1) entries. Never returns the zero vector.
Vector gen_signal(const SignalParams& params, std::uint64_t rng_seed);

/// M x N matrix with i.i.d. N(0, 1/N) entries.
Matrix gen_matrix(std::size_t m, std::size_t n, std::uint64_t rng_seed);

/// y = sign(Φ x⁰). Throws ZeroMeasurement on an exact tie.
Vector measure(const Matrix& phi, const Vector& x0);

FoldedInstance fold_signs(const Matrix& phi, const Vector& y);

/// Builds a complete instance with M = round(alpha N). A tie in the
/// measurements regenerates signal and matrix from a perturbed seed; the
/// seed stored in the result is the one that produced it.
ProblemInstance make_instance(const SignalParams& params, double alpha, std::uint64_t seed);

/// Debug dump: text header "N M seed alpha", then row-major Φ, x⁰ and y,
/// one value per line at round-trip precision.
void save_instance(const ProblemInstance& instance, const std::filesystem::path& path);
ProblemInstance load_instance(const std::filesystem::path& path);

}  // namespace onebit
