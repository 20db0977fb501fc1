#include "onebit/core_math.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace onebit;

TEST_CASE("gauss_tail: symmetry point and reflection") {
    CHECK(gauss_tail(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    for (double x : {-7.5, -3.0, -1.0, -0.2, 0.3, 1.0, 2.5, 6.0, 9.0}) CHECK(std::abs(gauss_tail(x) + gauss_tail(-x) - 1.0) < 1e-12);
}

TEST_CASE("gauss_tail: agrees with quadrature of the density") {
    // Frozen from an independent quadrature of the density on [1, 41].
    const double h1 = oracle::gauss_tail_quadrature(1.0);
    CHECK(std::abs(h1 - 0.15865525393145707) < 1e-12);
    CHECK(std::abs(gauss_tail(1.0) - h1) < 1e-12);
    for (double x : {-2.0, 0.5, 2.0, 4.0, 6.0}) CHECK(std::abs(gauss_tail(x) - oracle::gauss_tail_quadrature(x)) < 1e-12);
}

TEST_CASE("gauss_tail: far tail stays relatively accurate") {
    for (double x : {8.5, 10.0, 15.0, 25.0}) {
        const double ref = oracle::gauss_tail_quadrature(x);
        CHECK(gauss_tail(x) > 0.0);
        CHECK(std::abs(gauss_tail(x) / ref - 1.0) < 1e-9);
    }
}

TEST_CASE("gauss_tail: strictly decreasing with range (0, 1)") {
    double prev = gauss_tail(-8.0);
    for (double x = -7.9; x <= 30.0; x += 0.1) {
        const double v = gauss_tail(x);
        CHECK(v < prev);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        prev = v;
    }
}

TEST_CASE("f and g: values on each branch") {
    CHECK(f_prime(-2.0) == -2.0);
    CHECK(f_prime(3.0) == 0.0);
    CHECK(f_second(-0.5) == 1.0);
    CHECK(f_pot(-2.0) == 2.0);
    CHECK(f_pot(1.0) == 0.0);
    CHECK(g_prime(2.5) == doctest::Approx(1.5));
    CHECK(g_prime(-0.3) == 0.0);
    CHECK(g_prime(-1.7) == doctest::Approx(-0.7));
    CHECK(g_second(1.5) == 1.0);
    CHECK(g_second(0.9) == 0.0);
}

TEST_CASE("f and g: kink conventions") {
    CHECK(f_prime(0.0) == 0.0);
    CHECK(f_second(0.0) == 0.0);
    CHECK(g_second(1.0) == 0.0);
    CHECK(g_second(-1.0) == 0.0);
}

TEST_CASE("f and g: derivatives match centered differences away from kinks") {
    const double h = 1e-6;
    for (double u = -3.0; u <= 3.0; u += 0.0137) {
        if (std::abs(u) > 1e-3) {
            CHECK(std::abs((f_pot(u + h) - f_pot(u - h)) / (2 * h) - f_prime(u)) < 1e-5);
            CHECK(std::abs((f_prime(u + h) - f_prime(u - h)) / (2 * h) - f_second(u)) < 1e-5);
        }
        if (std::abs(std::abs(u) - 1.0) > 1e-3) {
            CHECK(std::abs((g_pot(u + h) - g_pot(u - h)) / (2 * h) - g_prime(u)) < 1e-5);
            CHECK(std::abs((g_prime(u + h) - g_prime(u - h)) / (2 * h) - g_second(u)) < 1e-5);
        }
    }
}

TEST_CASE("soft_threshold: examples, oddness, nonexpansiveness") {
    CHECK(soft_threshold(2.0, 0.5) == 1.5);
    CHECK(soft_threshold(0.4, 0.5) == 0.0);
    CHECK(soft_threshold(-2.0, 1.0) == -1.0);
    CHECK_THROWS_AS(soft_threshold(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(soft_threshold(1.0, -1.0), std::invalid_argument);
    std::vector<double> pts;
    for (double v = -3.0; v <= 3.0; v += 0.173) pts.push_back(v);
    for (double a : pts) {
        CHECK(soft_threshold(-a, 0.7) == -soft_threshold(a, 0.7));
        CHECK(soft_threshold(a, 1.0) == g_prime(a));
        for (double b : pts) CHECK(std::abs(soft_threshold(a, 0.7) - soft_threshold(b, 0.7)) <= std::abs(a - b) + 1e-15);
    }
}

TEST_CASE("phi: closed form examples and domain") {
    CHECK(phi(0.5, 1.0) == 0.0);
    CHECK(phi(2.0, 1.0) == doctest::Approx(-0.5));
    CHECK(phi_minimizer(2.0, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(phi(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(phi_minimizer(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("phi: matches brute-force minimization on a grid") {
    // min over x in [-20, 20], step 1e-4, of (Q/2)x^2 - w x + |x|.
    for (double q : {0.5, 1.0, 2.0}) {
        for (double w = -4.0; w <= 4.0 + 1e-12; w += 0.25) {
            double best = 0.0;
            for (long j = -200000; j <= 200000; ++j) {
                const double x = 1e-4 * static_cast<double>(j);
                best = std::min(best, 0.5 * q * x * x - w * x + std::abs(x));
            }
            CHECK(std::abs(phi(w, q) - best) < 1e-6);
            const double xs = phi_minimizer(w, q);
            CHECK(std::abs(0.5 * q * xs * xs - w * xs + std::abs(xs) - phi(w, q)) < 1e-12);
        }
    }
}

TEST_CASE("phi: non-positive and even in w") {
    for (double q : {0.3, 1.0, 4.0})
        for (double w = -5.0; w <= 5.0; w += 0.31) {
            CHECK(phi(w, q) <= 0.0);
            CHECK(phi(w, q) == phi(-w, q));
        }
}
