#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtdcva/dtd_core.hpp"
#include "dtdcva/errors.hpp"
#include "dtdcva/mathkit.hpp"

#include "support/oracles.hpp"

#include <cmath>
#include <random>

using namespace dtdcva;

namespace {
constexpr double kTwoPhiMinus1 = 0.3173105078629141028295;
// Phi(-1.5) + e^-1 Phi(-0.5), frozen offline
constexpr double kDriftedPd = 0.1803118185957863695501;
// sqrt(2/pi) e^{-1/2} / (2 Phi(-1)), frozen offline
constexpr double kSigmaIAtPhi1 = 1.525135276160981209089;
} // namespace

TEST_CASE("transition density vanishes at the barrier and is symmetric for zero drift") {
    CHECK(transition_density(1.0, 1e-14, 1.0, 0.0) < 1e-13);
    for (double y0 : {0.5, 1.0, 3.0}) {
        for (double y : {0.2, 1.0, 2.5}) {
            CHECK(transition_density(y0, y, 0.7, 0.0) ==
                  doctest::Approx(transition_density(y, y0, 0.7, 0.0)).epsilon(1e-13));
        }
    }
    CHECK_THROWS_AS(transition_density(0.0, 1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(transition_density(1.0, 1.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("transition density integrates to the survival probability") {
    for (double y0 : {0.5, 1.0, 2.0, 4.0}) {
        for (double tbar : {0.25, 1.0, 3.0}) {
            const double mass = oracles::integrate(
                [&](double y) {
                    return y <= 0.0 ? 0.0 : transition_density(y0, y, tbar, 0.0);
                },
                0.0, 40.0 * std::sqrt(tbar), 1e-11);
            const double survival = 1.0 - 2.0 * norm_cdf(-y0 / std::sqrt(tbar));
            CHECK(std::fabs(mass - survival) < 1e-8);
        }
    }
}

TEST_CASE("transition density with drift integrates to the Eq. 5 survival") {
    const double y0 = 1.0, tbar = 1.0, theta = 0.5;
    const double mass = oracles::integrate(
        [&](double y) { return y <= 0.0 ? 0.0 : transition_density(y0, y, tbar, theta); },
        0.0, 60.0, 1e-11);
    CHECK(std::fabs(mass - (1.0 - kDriftedPd)) < 1e-8);
}

TEST_CASE("default_prob values and monotonicity") {
    CHECK(default_prob(1.0, 1.0, 0.0) == doctest::Approx(kTwoPhiMinus1).epsilon(1e-14));
    CHECK(default_prob(40.0, 1.0, 0.0) < 1e-300); // zero to machine precision
    CHECK(default_prob(1.0, 1.0, 0.5) == doctest::Approx(kDriftedPd).epsilon(1e-14));

    double prev = 0.0;
    for (double tbar = 0.1; tbar <= 10.0; tbar += 0.1) {
        const double p = default_prob(1.5, tbar, 0.0);
        CHECK(p > prev);
        prev = p;
    }
    prev = 1.0;
    for (double y0 = 0.1; y0 <= 8.0; y0 += 0.1) {
        const double p = default_prob(y0, 2.0, 0.0);
        CHECK(p < prev);
        prev = p;
    }
    CHECK_THROWS_AS(default_prob(-1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("bucket_default_prob at the barrier and the calibration identity") {
    const auto curve = oracles::flat_hazard_curve(0.02);
    DtdParams params;
    params.y0 = 3.0;

    DtdState near_barrier{0, 1e-12, 1.0, true, false};
    CHECK(bucket_default_prob(near_barrier, curve, params, 2.0) ==
          doctest::Approx(1.0).epsilon(1e-9));

    // kappa = 0, t = 0, y = y0: the model reproduces the market curve exactly
    DtdState start{0, params.y0, 0.0, true, false};
    for (double T = 0.25; T <= 10.0; T += 0.25) {
        CHECK(std::fabs(bucket_default_prob(start, curve, params, T) -
                        curve.default_prob(T)) < 1e-12);
    }
}

TEST_CASE("spread_vol closed form and scaling") {
    const auto curve = MarketPdCurve::from_pillars({{5.0, kTwoPhiMinus1}, {10.0, 0.6}});
    CHECK(spread_vol(curve, 1.0, 5.0) == doctest::Approx(kSigmaIAtPhi1).epsilon(1e-12));
    CHECK(spread_vol(curve, 2.0, 5.0) ==
          doctest::Approx(kSigmaIAtPhi1 / 2.0).epsilon(1e-12)); // 1/y0 scaling

    const auto zero = MarketPdCurve::from_pillars({{5.0, 0.0}, {10.0, 0.0}});
    CHECK_THROWS_AS(spread_vol(zero, 1.0, 5.0), DegenerateCurveError);
}

TEST_CASE("calibrate_y0 inverts spread_vol") {
    const auto curve = oracles::flat_hazard_curve(0.025);
    for (double y0_true : {0.5, 1.0, 3.0, 7.0, 10.0}) {
        const double sigma = spread_vol(curve, y0_true, 5.0);
        const double y0 = calibrate_y0(curve, SpreadVolQuote{5.0, sigma});
        CHECK(std::fabs(y0 - y0_true) < 1e-12);
        CHECK(std::fabs(spread_vol(curve, y0, 5.0) - sigma) < 1e-12);
    }
    // doubling sigma_m halves y0
    const double base = calibrate_y0(curve, SpreadVolQuote{5.0, 0.3});
    const double halved = calibrate_y0(curve, SpreadVolQuote{5.0, 0.6});
    CHECK(halved == doctest::Approx(base / 2.0).epsilon(1e-13));
    CHECK(base > 0.0);
}

TEST_CASE("advance_dtd boundary behaviour and residual") {
    const auto curve = oracles::flat_hazard_curve(0.02);
    DtdParams params;
    params.y0 = 3.0;
    DtdState state{0, 3.0, 0.0, true, false};
    const double dt = 0.25;
    const double dvar = bucket_variance(curve, params.y0, 0.0, dt);
    const double s = std::sqrt(dvar);
    const double survival = 1.0 - 2.0 * norm_cdf(-state.y / s);

    const DtdState at_barrier = advance_dtd(state, 0.0, curve, params, dt);
    CHECK(at_barrier.alive);
    CHECK(at_barrier.y == doctest::Approx(1e-12));

    const DtdState defaulted = advance_dtd(state, survival, curve, params, dt);
    CHECK_FALSE(defaulted.alive);
    CHECK(defaulted.defaulted_this_bucket);

    const DtdState near_cap =
        advance_dtd(state, std::nextafter(survival, 0.0), curve, params, dt);
    CHECK(near_cap.alive);
    CHECK(near_cap.y > state.y);

    // transition CDF residual <= 1e-12 across the interior
    auto cdf = [&](double y_next) {
        return norm_cdf((y_next - state.y) / s) + norm_cdf(-(y_next + state.y) / s) -
               2.0 * norm_cdf(-state.y / s);
    };
    for (double frac : {1e-6, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999999}) {
        const double u = frac * survival;
        if (u <= 0.0) {
            continue;
        }
        const DtdState next = advance_dtd(state, u, curve, params, dt);
        CHECK(next.alive);
        CHECK(std::fabs(cdf(next.y) - u) <= 1e-12);
    }

    // the CDF is strictly increasing from 0 at the barrier to the survival
    double prev = 0.0;
    CHECK(cdf(1e-12) < 1e-12);
    for (double y = 0.05; y < 12.0; y += 0.05) {
        const double c = cdf(y);
        CHECK(c >= prev);
        prev = c;
    }
    CHECK(std::fabs(cdf(40.0) - survival) < 1e-12);

    CHECK_THROWS_AS(advance_dtd(state, -0.1, curve, params, dt), std::domain_error);
    CHECK_THROWS_AS(advance_dtd(defaulted, 0.5, curve, params, dt), std::domain_error);
}

TEST_CASE("advance_dtd with mean reversion solves the lambda-scaled equation") {
    const auto curve = oracles::flat_hazard_curve(0.02);
    DtdParams params;
    params.y0 = 3.0;
    params.kappa = 0.3;
    DtdState state{0, 2.4, 1.0, true, false};
    const double dt = 0.5;
    const double dvar = bucket_variance(curve, params.y0, 1.0, 1.5);
    const double s = std::sqrt(dvar);
    const double lam_t = std::exp(0.3 * 1.0);
    const double lam_next = std::exp(0.3 * 1.5);
    auto cdf = [&](double y_next) {
        return norm_cdf((lam_next * y_next - lam_t * state.y) / s) +
               norm_cdf(-(lam_next * y_next + lam_t * state.y) / s) -
               2.0 * norm_cdf(-lam_t * state.y / s);
    };
    for (double u : {0.01, 0.2, 0.5, 0.8}) {
        const DtdState next = advance_dtd(state, u, curve, params, dt);
        CHECK(next.alive);
        CHECK(std::fabs(cdf(next.y) - u) <= 1e-12);
    }
}

TEST_CASE("advance_dtd matches the transition law in distribution") {
    const auto curve = oracles::flat_hazard_curve(0.02);
    DtdParams params;
    params.y0 = 3.0;
    DtdState state{0, 3.0, 0.0, true, false};
    const double dt = 1.0;
    const double dvar = bucket_variance(curve, params.y0, 0.0, dt);
    const double s = std::sqrt(dvar);
    const double survival = 1.0 - 2.0 * norm_cdf(-state.y / s);

    const long n = 1000000;
    std::mt19937_64 gen(20240601);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    long survived = 0;
    std::vector<double> ys;
    ys.reserve(static_cast<std::size_t>(n * survival) + 1000);
    for (long i = 0; i < n; ++i) {
        const DtdState next = advance_dtd(state, unif(gen), curve, params, dt);
        if (next.alive) {
            ++survived;
            ys.push_back(next.y);
        }
    }
    const double freq = static_cast<double>(survived) / static_cast<double>(n);
    const double se = std::sqrt(survival * (1.0 - survival) / static_cast<double>(n));
    CHECK(std::fabs(freq - survival) <= 3.0 * se);

    // survivors against the renormalized transition CDF, KS at 1%
    auto cdf = [&](double y_next) {
        return (norm_cdf((y_next - state.y) / s) + norm_cdf(-(y_next + state.y) / s) -
                2.0 * norm_cdf(-state.y / s)) /
               survival;
    };
    const double d = oracles::ks_statistic(std::move(ys), cdf);
    CHECK(oracles::ks_pass_one_sample(d, static_cast<std::size_t>(survived), 0.01));
}

TEST_CASE("Chapman-Kolmogorov composition reproduces the two-step survival") {
    const auto curve = oracles::flat_hazard_curve(0.03);
    DtdParams params;
    params.y0 = 2.0;
    DtdState state{0, 2.0, 0.0, true, false};
    const double s_mid = 1.0;
    const double T = 3.0;

    // direct survival over [0, T]
    const double p_direct = 1.0 - bucket_default_prob(state, curve, params, T);

    // composed: advance to s, survivors contribute p_S(s, T)
    const long n = 400000;
    std::mt19937_64 gen(555);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> vals;
    vals.reserve(n);
    for (long i = 0; i < n; ++i) {
        const DtdState mid = advance_dtd(state, unif(gen), curve, params, s_mid);
        if (mid.alive) {
            vals.push_back(1.0 - bucket_default_prob(mid, curve, params, T));
        } else {
            vals.push_back(0.0);
        }
    }
    const auto stat = oracles::mean_se(vals);
    CHECK(std::fabs(stat.mean - p_direct) <= 3.0 * stat.se);
}
