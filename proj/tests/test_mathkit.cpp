#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtdcva/errors.hpp"
#include "dtdcva/mathkit.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace dtdcva;

TEST_CASE("norm_cdf basic values") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(norm_cdf(40.0) == 1.0);
    // 50-digit erf evaluation, frozen offline
    CHECK(std::fabs(norm_cdf(-1.0) - 0.1586552539314570514148) < 1e-15);
    CHECK(std::fabs(norm_cdf(-2.0) - 0.02275013194817920720028) < 1e-15);
    CHECK(std::fabs(norm_cdf(-8.0) - 6.220960574271784123516e-16) < 1e-22);
    CHECK(norm_cdf(-50.0) > 0.0); // saturates at the subnormal floor, stays positive
}

TEST_CASE("norm_cdf is monotone") {
    double prev = 0.0;
    for (double x = -9.0; x <= 9.0; x += 0.01) {
        const double p = norm_cdf(x);
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("norm_inv basic values and domain") {
    CHECK(norm_inv(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(norm_inv(norm_cdf(-2.0)) == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(norm_inv(0.1586552539314570514148) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK_THROWS_AS(norm_inv(0.0), std::domain_error);
    CHECK_THROWS_AS(norm_inv(1.0), std::domain_error);
    CHECK_THROWS_AS(norm_inv(-0.25), std::domain_error);
}

TEST_CASE("norm_inv round trip across the range") {
    // x-space round trip. For x above ~5.6 the complement of norm_cdf(x)
    // quantizes to half an ulp of 1.0 (2^-54), which caps any recovery of x
    // at 2^-54 / pdf(x); assert the representability bound there.
    for (double x = -8.0; x <= 8.0; x += 0.0625) {
        const double p = norm_cdf(x);
        const double bound = 1e-9 + 1.5 * 0x1.0p-54 / norm_pdf(x);
        CHECK(std::fabs(norm_inv(p) - x) < (x <= 5.5 ? 1e-9 : bound));
    }
    for (double p = 1e-300; p < 1.0; p *= 97.0) {
        const double x = norm_inv(p);
        CHECK(std::fabs(norm_cdf(x) - p) <= 1e-12);
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (double p = 0.001; p < 1.0; p += 0.001) {
        const double x = norm_inv(p);
        CHECK(x >= prev);
        prev = x;
    }
}

namespace {

// exact(q, u) = -Phi^{-1}(2 u Phi(-q)), 60-digit bisection, frozen offline
struct TailCase {
    double q, u, exact;
};
const std::vector<TailCase> kTailTable = {
    {8.0, 0.01, 8.46837577630607799},   {8.0, 0.1, 8.19584519305859166},
    {8.0, 0.5, 8.0},                    {8.0, 0.9, 7.92730400256713827},
    {8.0, 0.99, 7.9154552269040545},    {8.0, 1.0, 7.91420478546017045},
    {9.0, 0.01, 9.41991918175798694},   {9.0, 0.1, 9.17503319289865152},
    {9.0, 0.5, 9.0},                    {9.0, 0.9, 8.93524095273548397},
    {9.0, 0.99, 8.92469697990316771},   {9.0, 1.0, 8.92358442257422675},
    {10.0, 0.01, 10.3803067955846721},  {10.0, 0.1, 10.1581534825273491},
    {10.0, 0.5, 10.0},                  {10.0, 0.9, 9.9416251852551148},
    {10.0, 0.99, 9.93212794857742698},  {10.0, 1.0, 9.93112595805721645},
    {12.0, 0.01, 12.3195846977932985},  {12.0, 0.1, 12.132485635517195},
    {12.0, 0.5, 12.0},                  {12.0, 0.9, 11.9512534022761495},
    {12.0, 0.99, 11.9433306013807843},  {12.0, 1.0, 11.9424948500237369},
    {15.0, 0.01, 15.2574670091226842},  {15.0, 0.1, 15.1064507638713522},
    {15.0, 0.5, 15.0},                  {15.0, 0.9, 14.9609356847277247},
    {15.0, 0.99, 14.9545918372678363},  {15.0, 1.0, 14.9539227312305176},
    {20.0, 0.01, 20.1941777851609517},  {20.0, 0.1, 20.0801125470592219},
    {20.0, 0.5, 20.0},                  {20.0, 0.9, 19.9706621844415676},
    {20.0, 0.99, 19.9659009874074779},  {20.0, 1.0, 19.9653988594563772},
    {25.0, 0.01, 25.1557481304673614},  {25.0, 0.1, 25.0641928499591958},
    {25.0, 0.5, 25.0},                  {25.0, 0.9, 24.976514976715328},
    {25.0, 0.99, 24.9727047829670928},  {25.0, 1.0, 24.9723029691622905},
    {30.0, 0.01, 30.1299754186062177},  {30.0, 0.1, 30.0535408476880307},
    {30.0, 0.5, 30.0},                  {30.0, 0.9, 29.9804224349830776},
    {30.0, 0.99, 29.9772467117297479},  {30.0, 1.0, 29.9769118162326518},
};

} // namespace

TEST_CASE("tail_inv_asymptotic matches extended-precision evaluation within 1e-3") {
    for (const auto& c : kTailTable) {
        const double approx = tail_inv_asymptotic(c.q, c.u);
        CHECK(std::fabs(approx - c.exact) / c.exact < 1e-3);
    }
}

TEST_CASE("tail_inv_asymptotic monotonicity and domain") {
    for (double u : {0.01, 0.5, 1.0}) {
        double prev = 0.0;
        for (double q = 8.0; q <= 30.0; q += 0.5) {
            const double v = tail_inv_asymptotic(q, u);
            CHECK(v > prev);
            prev = v;
        }
    }
    CHECK_THROWS_AS(tail_inv_asymptotic(7.9, 0.5), std::domain_error);
    CHECK_THROWS_AS(tail_inv_asymptotic(8.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(tail_inv_asymptotic(8.0, 1.5), std::domain_error);
}

TEST_CASE("bivar_norm_cdf trivial identities") {
    CHECK(bivar_norm_cdf(0.0, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
    for (double a : {-1.5, 0.3, 2.0}) {
        for (double b : {-0.7, 0.0, 1.2}) {
            CHECK(bivar_norm_cdf(a, b, 0.0) ==
                  doctest::Approx(norm_cdf(a) * norm_cdf(b)).epsilon(1e-12));
        }
    }
    // closed form N2(0,0,rho) = 1/4 + asin(rho)/(2 pi)
    for (double rho : {-0.99, -0.75, -0.3, 0.2874, 0.5, 0.9, 0.99}) {
        CHECK(std::fabs(bivar_norm_cdf(0.0, 0.0, rho) -
                        (0.25 + std::asin(rho) / (2.0 * M_PI))) < 1e-10);
    }
    CHECK_THROWS_AS(bivar_norm_cdf(0.0, 0.0, 1.0001), std::domain_error);
}

TEST_CASE("bivar_norm_cdf against high-precision quadrature values") {
    // frozen from 50-digit 1-D quadrature of phi(x) Phi((b - rho x)/sqrt(1-rho^2))
    struct Case {
        double a, b, rho, expected;
    };
    const Case cases[] = {
        {0.5, -0.3, 0.6, 0.34362253011121081},
        {1.0, 1.0, -0.5, 0.686471794209940161},
        {-1.5, 2.0, 0.95, 0.066807201268858066},
        {-2.0, -2.0, 0.9, 0.0133612561270192871},
        {0.0, 0.0, 0.5, 1.0 / 3.0},
        {3.0, -3.0, -0.3, 0.00132604651588493872},
        {1.2, 0.4, 0.99, 0.655421741557493291},
        {-0.7, 0.3, -0.99, 0.0000344881292516526539},
        {2.0, 2.0, 0.2874, 0.95644572485707905},
    };
    for (const auto& c : cases) {
        CHECK(std::fabs(bivar_norm_cdf(c.a, c.b, c.rho) - c.expected) < 1e-7);
    }
}

TEST_CASE("bivar_norm_cdf marginalization and monotonicity properties") {
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    std::uniform_real_distribution<double> corr(-0.999, 0.999);
    for (int i = 0; i < 2000; ++i) {
        const double a = unif(gen);
        const double b = unif(gen);
        const double rho = corr(gen);
        // P(X<=a, Y<=b) + P(X<=a, Y>b) = Phi(a); the second term is
        // N2(a, -b; -rho) by symmetry of (X, -Y)
        const double lhs = bivar_norm_cdf(a, b, rho) + bivar_norm_cdf(a, -b, -rho);
        CHECK(std::fabs(lhs - norm_cdf(a)) < 2e-7);
    }
    for (int i = 0; i < 500; ++i) {
        const double a = unif(gen);
        const double b = unif(gen);
        const double rho = corr(gen);
        const double base = bivar_norm_cdf(a, b, rho);
        CHECK(bivar_norm_cdf(a + 0.1, b, rho) >= base - 1e-12);
        CHECK(bivar_norm_cdf(a, b + 0.1, rho) >= base - 1e-12);
        if (std::fabs(rho + 0.05) < 0.999) {
            CHECK(bivar_norm_cdf(a, b, rho + 0.05) >= base - 1e-9);
        }
    }
    // limits at rho = +-1
    CHECK(bivar_norm_cdf(0.7, -0.2, 1.0) == doctest::Approx(norm_cdf(-0.2)).epsilon(1e-14));
    CHECK(bivar_norm_cdf(0.7, -0.2, -1.0) ==
          doctest::Approx(std::max(0.0, norm_cdf(0.7) + norm_cdf(-0.2) - 1.0)).epsilon(1e-12));
}

TEST_CASE("cholesky identities and failures") {
    const LowerTriangular eye = cholesky({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(eye(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
        }
    }

    const double rho = 0.35;
    const LowerTriangular two = cholesky({1, rho, rho, 1}, 2);
    CHECK(two(0, 0) == doctest::Approx(1.0));
    CHECK(two(0, 1) == 0.0);
    CHECK(two(1, 0) == doctest::Approx(rho));
    CHECK(two(1, 1) == doctest::Approx(std::sqrt(1.0 - rho * rho)));

    // random SPD: A = B B^T + n I, reconstruction within 1e-12
    std::mt19937 gen(777);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const std::size_t n = 5;
    std::vector<double> b(n * n);
    for (auto& v : b) {
        v = unif(gen);
    }
    std::vector<double> spd(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                spd[i * n + j] += b[i * n + k] * b[j * n + k];
            }
        }
        spd[i * n + i] += static_cast<double>(n);
    }
    const LowerTriangular chol = cholesky(spd, n);
    const auto back = chol.multiply_transpose();
    for (std::size_t i = 0; i < n * n; ++i) {
        CHECK(std::fabs(back[i] - spd[i]) < 1e-12);
    }

    try {
        cholesky({1.0, 0.99, 0.99, 0.9}, 2); // second pivot negative
        CHECK(false);
    } catch (const NotPositiveDefiniteError& e) {
        CHECK(e.pivot() == 1);
    }
    CHECK_THROWS_AS(cholesky({1.0, 0.5, 0.1, 1.0}, 2), std::invalid_argument);
}

TEST_CASE("clamp_probability pins to the working interval") {
    CHECK(clamp_probability(0.5) == 0.5);
    CHECK(clamp_probability(0.0) == 1e-16);
    CHECK(clamp_probability(1.0) == 1.0 - 1e-16);
    CHECK(clamp_probability(-3.0) == 1e-16);
}
