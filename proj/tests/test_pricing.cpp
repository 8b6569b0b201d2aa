#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtdcva/errors.hpp"
#include "dtdcva/pricing.hpp"

#include "support/oracles.hpp"

#include <cmath>

using namespace dtdcva;

namespace {

SurvivalCurve flat_hazard_survival(double t0, double maturity, double hazard, double step) {
    SurvivalCurve sc;
    sc.base_time = t0;
    for (double t = t0 + step; t <= maturity + 1e-9; t += step) {
        sc.times.push_back(t);
        sc.survival.push_back(std::exp(-hazard * (t - t0)));
    }
    return sc;
}

Instrument cds_deal(const std::string& id, double notional, double maturity, double spread,
                    double recovery, int direction) {
    Instrument inst;
    inst.deal_id = id;
    inst.kind = InstrumentKind::Cds;
    inst.reference_name = "REF";
    inst.name_index = 0;
    inst.notional = notional;
    inst.maturity = maturity;
    inst.contract_spread = spread;
    inst.recovery = recovery;
    inst.direction = direction;
    return inst;
}

} // namespace

TEST_CASE("risky_zcb closed form and monotonicity") {
    CHECK(risky_zcb(0.0, 0.4, 0.95) == 0.95);
    CHECK(risky_zcb(0.3, 1.0, 0.95) == 0.95);
    CHECK(risky_zcb(0.2, 0.4, 0.9) == doctest::Approx(0.792).epsilon(1e-15));

    double prev = 0.0;
    for (double r = 0.0; r <= 1.0; r += 0.05) {
        const double z = risky_zcb(0.3, r, 0.9);
        CHECK(z >= prev);
        CHECK(z >= 0.4 * 0.0);
        prev = z;
    }
    prev = 1.0;
    for (double pd = 0.0; pd <= 1.0; pd += 0.05) {
        const double z = risky_zcb(pd, 0.4, 0.9);
        CHECK(z <= prev);
        CHECK(z >= 0.4 * 0.9 - 1e-15);
        CHECK(z <= 0.9 + 1e-15);
        prev = z;
    }
    CHECK_THROWS_AS(risky_zcb(1.2, 0.4, 0.9), std::domain_error);
}

TEST_CASE("cds_par_spread trivial zeros and errors") {
    const auto disc = oracles::flat_discount(0.03);
    SurvivalCurve alive = flat_hazard_survival(0.0, 5.0, 0.0, 0.25);
    CHECK(cds_par_spread(0.0, 5.0, alive, disc, 0.4) == 0.0);

    SurvivalCurve risky = flat_hazard_survival(0.0, 5.0, 0.02, 0.25);
    CHECK(cds_par_spread(0.0, 5.0, risky, disc, 1.0) == 0.0);
    CHECK(cds_par_spread(0.0, 5.0, risky, disc, 0.4) > 0.0);

    SurvivalCurve empty;
    empty.base_time = 0.0;
    CHECK_THROWS_AS(cds_par_spread(0.0, 5.0, empty, disc, 0.4), std::invalid_argument);

    SurvivalCurve bad = risky;
    bad.survival[3] = 1.5; // increasing survival
    CHECK_THROWS_AS(cds_par_spread(0.0, 5.0, bad, disc, 0.4), std::invalid_argument);
}

TEST_CASE("cds_par_spread against fine-grid leg integration") {
    const double h = 0.01;
    const double r = 0.03;
    const double recovery = 0.4;
    const double T = 5.0;
    const auto disc = oracles::flat_discount(r);

    const double quarterly =
        cds_par_spread(0.0, T, flat_hazard_survival(0.0, T, h, 0.25), disc, recovery, 0.25);

    // direct leg integration: protection = (1-R) int h e^{-ht} e^{-rt},
    // annuity = int e^{-(h+r)t}; par = (1-R) h exactly for flat curves
    const double protection = oracles::integrate(
        [&](double t) { return h * std::exp(-(h + r) * t); }, 0.0, T, 1e-12);
    const double annuity = oracles::integrate(
        [&](double t) { return std::exp(-(h + r) * t); }, 0.0, T, 1e-12);
    const double continuous = (1.0 - recovery) * protection / annuity;
    CHECK(continuous == doctest::Approx((1.0 - recovery) * h).epsilon(1e-10));

    // daily discretization converges to the continuous limit; quarterly sits
    // within its own O(h delta) discretization band
    const double daily =
        cds_par_spread(0.0, T, flat_hazard_survival(0.0, T, h, 1.0 / 365.0), disc, recovery,
                       1.0 / 365.0);
    CHECK(std::fabs(daily - continuous) / continuous < 1e-4);
    CHECK(std::fabs(quarterly - continuous) / continuous < 5e-3);
}

TEST_CASE("cds_mtm par condition, premium-only leg, antisymmetry") {
    const auto disc = oracles::flat_discount(0.02);
    const SurvivalCurve sc = flat_hazard_survival(0.0, 5.0, 0.015, 0.25);
    const double par = cds_par_spread(0.0, 5.0, sc, disc, 0.4);

    CHECK(cds_mtm(cds_deal("at-par", 100.0, 5.0, par, 0.4, 1), 0.0, sc, disc) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // riskless curve, long protection at 100bp: pay the premium for nothing
    const SurvivalCurve alive = flat_hazard_survival(0.0, 5.0, 0.0, 0.25);
    double annuity = 0.0;
    for (double t = 0.25; t <= 5.0 + 1e-9; t += 0.25) {
        annuity += 0.25 * disc.df(t);
    }
    const double mtm = cds_mtm(cds_deal("prem", 100.0, 5.0, 0.01, 0.4, 1), 0.0, alive, disc);
    CHECK(mtm == doctest::Approx(-0.01 * annuity * 100.0).epsilon(1e-12));

    const double long_mtm = cds_mtm(cds_deal("l", 50.0, 5.0, 0.02, 0.4, 1), 0.0, sc, disc);
    const double short_mtm = cds_mtm(cds_deal("s", 50.0, 5.0, 0.02, 0.4, -1), 0.0, sc, disc);
    CHECK(long_mtm == doctest::Approx(-short_mtm).epsilon(1e-14));

    CHECK_THROWS_AS(cds_mtm(cds_deal("dead", 1.0, 5.0, 0.01, 0.4, 1), 5.0, sc, disc),
                    std::invalid_argument);
}

TEST_CASE("scenario_survival_curve reproduces the market curve at inception") {
    const auto curve = oracles::flat_hazard_curve(0.02);
    DtdParams params;
    params.y0 = 4.0;
    DtdState state{0, 4.0, 0.0, true, false};
    const SurvivalCurve sc = scenario_survival_curve(state, curve, params, 10.0);
    for (std::size_t k = 0; k < sc.times.size(); ++k) {
        CHECK(sc.survival[k] ==
              doctest::Approx(curve.survival(sc.times[k])).epsilon(1e-12));
    }
    CHECK(sc.times.back() == doctest::Approx(10.0));
}

TEST_CASE("portfolio_exposure settlement values and netting split") {
    const auto disc = oracles::flat_discount(0.02);
    const auto curve = oracles::flat_hazard_curve(0.015);
    PricingContext ctx;
    ctx.disc = &disc;
    ctx.curves = {&curve, &curve};
    ctx.params = {DtdParams{3.0, 0.0, 0.0}, DtdParams{3.0, 0.0, 0.0}};

    // two names, both defaulted in the current bucket:
    // deal A settles at (1-0.5)*10 = +5, deal B at -(1-0.7)*10 = -3
    std::vector<DtdState> states = {{0, 0.0, 1.0, false, true}, {1, 0.0, 1.0, false, true}};
    Instrument a = cds_deal("A", 10.0, 5.0, 0.01, 0.5, 1);
    Instrument b = cds_deal("B", 10.0, 5.0, 0.01, 0.7, -1);
    b.name_index = 1;

    SUBCASE("single deal") {
        const auto netted = portfolio_exposure({a}, 1.0, states, ctx, true);
        const auto gross = portfolio_exposure({a}, 1.0, states, ctx, false);
        CHECK(netted.first == doctest::Approx(5.0));
        CHECK(netted.second == 0.0);
        CHECK(gross.first == doctest::Approx(5.0));
        CHECK(gross.second == 0.0);
    }

    SUBCASE("mixed-sign portfolio") {
        const auto netted = portfolio_exposure({a, b}, 1.0, states, ctx, true);
        CHECK(netted.first == doctest::Approx(2.0));
        CHECK(netted.second == 0.0);
        const auto gross = portfolio_exposure({a, b}, 1.0, states, ctx, false);
        CHECK(gross.first == doctest::Approx(5.0));
        CHECK(gross.second == doctest::Approx(3.0));
        CHECK(portfolio_value({a, b}, 1.0, states, ctx) == doctest::Approx(2.0));
    }

    SUBCASE("empty portfolio") {
        const auto e = portfolio_exposure({}, 1.0, states, ctx, true);
        CHECK(e.first == 0.0);
        CHECK(e.second == 0.0);
    }

    SUBCASE("names defaulted in earlier buckets drop out") {
        states[0].defaulted_this_bucket = false;
        const auto e = portfolio_exposure({a, b}, 1.0, states, ctx, false);
        CHECK(e.first == 0.0);
        CHECK(e.second == doctest::Approx(3.0));
    }

    SUBCASE("bond settles at its recovery claim") {
        Instrument bond = a;
        bond.kind = InstrumentKind::RiskyZeroBond;
        bond.recovery = 0.35;
        const auto e = portfolio_exposure({bond}, 1.0, states, ctx, true);
        CHECK(e.first == doctest::Approx(0.35 * 10.0));
    }

    SUBCASE("unknown name index") {
        Instrument bad = a;
        bad.name_index = 7;
        CHECK_THROWS_AS(portfolio_exposure({bad}, 1.0, states, ctx, true),
                        std::invalid_argument);
    }
}

TEST_CASE("netted exposure is subadditive against gross") {
    const auto disc = oracles::flat_discount(0.02);
    const auto curve = oracles::flat_hazard_curve(0.02);
    PricingContext ctx;
    ctx.disc = &disc;
    ctx.curves = {&curve};
    ctx.params = {DtdParams{3.5, 0.0, 0.0}};
    std::vector<DtdState> states = {{0, 3.1, 1.0, true, false}};

    const std::vector<Instrument> deals = {
        cds_deal("d1", 100.0, 7.0, 0.010, 0.4, 1),
        cds_deal("d2", 80.0, 5.0, 0.025, 0.4, -1),
        cds_deal("d3", 40.0, 10.0, 0.018, 0.4, 1),
    };
    for (double y : {0.4, 1.1, 2.2, 3.5, 6.0}) {
        states[0].y = y;
        const auto netted = portfolio_exposure(deals, 1.0, states, ctx, true);
        const auto gross = portfolio_exposure(deals, 1.0, states, ctx, false);
        CHECK(netted.first <= gross.first + 1e-12);
        CHECK(netted.second <= gross.second + 1e-12);
        CHECK(netted.first - netted.second ==
              doctest::Approx(gross.first - gross.second).epsilon(1e-12));
    }
}

TEST_CASE("short-spread approximation stays within 5% of the full formula") {
    // (1-R) p_D(t) / t vs the quarterly par formula, flat quote curves up to
    // 200bp, R = 0.4, tenors where the approximation's premise holds
    const auto disc = oracles::flat_discount(0.03);
    for (const double spread_bp : {25.0, 50.0, 100.0, 150.0, 200.0}) {
        CdsQuoteSet quotes;
        quotes.tenors = {1.0, 2.0, 3.0, 5.0, 7.0, 10.0};
        quotes.spreads.assign(6, spread_bp * 1e-4);
        quotes.recovery = 0.4;
        const auto curve = bootstrap_pd_curve(quotes, disc);
        for (const double t : {0.5, 1.0, 2.0, 3.0}) {
            SurvivalCurve sc;
            sc.base_time = 0.0;
            for (double u = 0.25; u <= t + 1e-9; u += 0.25) {
                sc.times.push_back(u);
                sc.survival.push_back(curve.survival(u));
            }
            const double full = cds_par_spread(0.0, t, sc, disc, 0.4);
            const double approx = (1.0 - 0.4) * curve.default_prob(t) / t;
            CHECK(std::fabs(approx - full) / full < 0.05);
        }
    }
}
