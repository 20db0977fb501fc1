#include "onebit/model.hpp"

#include "onebit/rng.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <vector>

namespace onebit {

void SignalParams::validate() const {
    if (n == 0) throw std::invalid_argument("SignalParams: n must be positive");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("SignalParams: rho must lie in (0, 1]");
    if (k_exact && (*k_exact == 0 || *k_exact > n))
        throw std::invalid_argument("SignalParams: k_exact must lie in [1, n]");
}

Vector gen_signal(const SignalParams& params, std::uint64_t rng_seed) {
    params.validate();
    Rng rng(derive_seed(rng_seed, {0}));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(params.n);
    Vector x = Vector::Zero(n);

    if (params.k_exact) {
        // Partial Fisher-Yates: the first k slots of the permutation are the support.
        std::vector<Eigen::Index> order(params.n);
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        for (std::size_t i = 0; i < *params.k_exact; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, params.n - 1);
            std::swap(order[i], order[pick(rng)]);
        }
        for (std::size_t i = 0; i < *params.k_exact; ++i) {
            double v = 0.0;
            while (v == 0.0) v = normal(rng);
            x[order[i]] = v;
        }
        return x;
    }

    std::bernoulli_distribution nonzero(params.rho);
    do {
        for (Eigen::Index i = 0; i < n; ++i) x[i] = nonzero(rng) ? normal(rng) : 0.0;
    } while ((x.array() != 0.0).count() == 0);
    return x;
}

Matrix gen_matrix(std::size_t m, std::size_t n, std::uint64_t rng_seed) {
    if (m == 0 || n == 0) throw std::invalid_argument("gen_matrix: dimensions must be positive");
    Rng rng(derive_seed(rng_seed, {1}));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    Matrix phi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < phi.rows(); ++r)
        for (Eigen::Index c = 0; c < phi.cols(); ++c) phi(r, c) = normal(rng);
    return phi;
}

Vector measure(const Matrix& phi, const Vector& x0) {
    if (phi.cols() != x0.size()) throw std::invalid_argument("measure: dimension mismatch");
    const Vector u = phi * x0;
    Vector y(u.size());
    for (Eigen::Index mu = 0; mu < u.size(); ++mu) {
        if (u[mu] == 0.0) throw ZeroMeasurement(static_cast<std::size_t>(mu));
        y[mu] = u[mu] > 0.0 ? 1.0 : -1.0;
    }
    return y;
}

FoldedInstance fold_signs(const Matrix& phi, const Vector& y) {
    if (phi.rows() != y.size()) throw std::invalid_argument("fold_signs: dimension mismatch");
    return FoldedInstance{y.asDiagonal() * phi};
}

ProblemInstance make_instance(const SignalParams& params, double alpha, std::uint64_t seed) {
    params.validate();
    if (!(alpha > 0.0)) throw std::invalid_argument("make_instance: alpha must be positive");
    const auto m = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(params.n)));
    if (m == 0) throw std::invalid_argument("make_instance: alpha * n rounds to zero measurements");

    constexpr int max_attempts = 64;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, {0xfeedULL, static_cast<std::uint64_t>(attempt)});
        ProblemInstance inst;
        inst.x0 = gen_signal(params, s);
        inst.phi = gen_matrix(m, params.n, s);
        try {
            inst.y = measure(inst.phi, inst.x0);
        } catch (const ZeroMeasurement&) {
            continue;
        }
        inst.seed = s;
        inst.alpha = static_cast<double>(m) / static_cast<double>(params.n);
        return inst;
    }
    throw std::runtime_error("make_instance: could not draw a tie-free instance");
}

void save_instance(const ProblemInstance& instance, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_instance: cannot open " + path.string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << instance.n() << ' ' << instance.m() << ' ' << instance.seed << ' ' << instance.alpha << '\n';
    for (Eigen::Index r = 0; r < instance.phi.rows(); ++r)
        for (Eigen::Index c = 0; c < instance.phi.cols(); ++c) out << instance.phi(r, c) << '\n';
    for (Eigen::Index i = 0; i < instance.x0.size(); ++i) out << instance.x0[i] << '\n';
    for (Eigen::Index mu = 0; mu < instance.y.size(); ++mu) out << instance.y[mu] << '\n';
    if (!out) throw std::runtime_error("save_instance: write failed for " + path.string());
}

ProblemInstance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_instance: cannot open " + path.string());
    std::size_t n = 0, m = 0;
    ProblemInstance inst;
    if (!(in >> n >> m >> inst.seed >> inst.alpha) || n == 0 || m == 0)
        throw std::runtime_error("load_instance: bad header in " + path.string());
    inst.phi.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    inst.x0.resize(static_cast<Eigen::Index>(n));
    inst.y.resize(static_cast<Eigen::Index>(m));
    for (Eigen::Index r = 0; r < inst.phi.rows(); ++r)
        for (Eigen::Index c = 0; c < inst.phi.cols(); ++c) in >> inst.phi(r, c);
    for (Eigen::Index i = 0; i < inst.x0.size(); ++i) in >> inst.x0[i];
    for (Eigen::Index mu = 0; mu < inst.y.size(); ++mu) in >> inst.y[mu];
    if (!in) throw std::runtime_error("load_instance: truncated body in " + path.string());
    return inst;
}

}  // namespace onebit
