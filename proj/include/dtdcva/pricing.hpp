#pragma once

#include "dtdcva/dtd_core.hpp"
#include "dtdcva/market_data.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dtdcva {

enum class InstrumentKind { RiskyZeroBond, Cds };

/// A priceable deal referencing one credit name. direction is +1 for long
/// (protection buyer / bond holder) and -1 for short.
struct Instrument {
    std::string deal_id;
    InstrumentKind kind = InstrumentKind::Cds;
    std::string reference_name;
    int name_index = -1; // resolved against the engine's name table
    double notional = 0.0;
    double maturity = 0.0;
    double contract_spread = 0.0; // decimal p.a., CDS only
    double recovery = 0.4;
    int direction = 1;
    double payment_interval = 0.25;

    void validate() const;
};

/// Counterparty / investor recoveries and netting behaviour for one run.
struct PartyConfig {
    double recovery_cpty = 0.4;
    double recovery_inv = 0.4;
    bool netting = true;
    std::optional<std::string> trigger_rating;

    void validate() const;
};

/// Survival probabilities p_S(base_time, T_k) of one name on its payment
/// grid, conditional on the simulated state at base_time.
struct SurvivalCurve {
    double base_time = 0.0;
    std::vector<double> times;    // absolute T_k > base_time
    std::vector<double> survival; // non-increasing, from <= 1
};

/// Per-name market data needed to reprice deals inside a scenario.
struct PricingContext {
    const DiscountCurve* disc = nullptr;
    std::vector<const MarketPdCurve*> curves; // indexed by name
    std::vector<DtdParams> params;            // indexed by name
};

/// Risky zero-coupon bond value per unit face: [1 - (1-R) p_D] D.
double risky_zcb(double pd, double recovery, double df);

/// Builds the model-consistent conditional survival curve of an alive name
/// from its current state, on the quarterly grid up to `maturity`.
SurvivalCurve scenario_survival_curve(const DtdState& state, const MarketPdCurve& curve,
                                      const DtdParams& params, double maturity,
                                      double payment_interval = 0.25);

/// Par CDS spread at time t for maturity T off the supplied survival curve:
/// 2 (1-R) sum DF (pS_{k-1} - pS_k) / (delta sum DF (pS_{k-1} + pS_k)).
double cds_par_spread(double t, double T, const SurvivalCurve& sc, const DiscountCurve& disc,
                      double recovery, double delta = 0.25);

/// Mark-to-market of a CDS at time t: (par - contract) x risky annuity x
/// notional x direction. Zero exactly at the scenario par spread.
double cds_mtm(const Instrument& inst, double t, const SurvivalCurve& sc,
               const DiscountCurve& disc);

/// Portfolio exposure split (positive, negative) at time t.
/// With netting: (max(sum W, 0), max(-sum W, 0)); without:
/// (sum max(W,0), sum max(-W,0)). A name that defaulted in the current
/// bucket settles once: a CDS at the protection payout (1-R) x notional x
/// direction, a bond at its recovery claim R x notional x direction; names
/// defaulted in earlier buckets contribute nothing.
std::pair<double, double> portfolio_exposure(const std::vector<Instrument>& deals, double t,
                                             const std::vector<DtdState>& states,
                                             const PricingContext& ctx, bool netting);

/// Sum of deal values (the trigger-rule MtM); same valuation rules as
/// portfolio_exposure.
double portfolio_value(const std::vector<Instrument>& deals, double t,
                       const std::vector<DtdState>& states, const PricingContext& ctx);

} // namespace dtdcva
