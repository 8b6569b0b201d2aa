#include "dtdcva/pricing.hpp"

#include "dtdcva/errors.hpp"
#include "dtdcva/mathkit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dtdcva {

void Instrument::validate() const {
    if (deal_id.empty()) {
        throw ValidationError("instrument: empty deal id");
    }
    if (!(maturity > 0.0)) {
        throw ValidationError("instrument " + deal_id + ": maturity must be positive");
    }
    if (recovery < 0.0 || recovery > 1.0) {
        throw ValidationError("instrument " + deal_id + ": recovery outside [0,1]");
    }
    if (notional == 0.0) {
        throw ValidationError("instrument " + deal_id + ": zero notional");
    }
    if (direction != 1 && direction != -1) {
        throw ValidationError("instrument " + deal_id + ": direction must be +1 or -1");
    }
    if (!(payment_interval > 0.0)) {
        throw ValidationError("instrument " + deal_id + ": payment interval must be positive");
    }
    if (kind == InstrumentKind::Cds) {
        const double periods = maturity / payment_interval;
        if (std::fabs(periods - std::lround(periods)) > 1e-9) {
            throw ValidationError("instrument " + deal_id +
                                  ": CDS maturity must be a multiple of the payment interval");
        }
    }
}

void PartyConfig::validate() const {
    if (recovery_cpty < 0.0 || recovery_cpty > 1.0 || recovery_inv < 0.0 || recovery_inv > 1.0) {
        throw ValidationError("party config: recoveries outside [0,1]");
    }
}

double risky_zcb(double pd, double recovery, double df) {
    if (pd < 0.0 || pd > 1.0 || recovery < 0.0 || recovery > 1.0 || df < 0.0 || df > 1.0) {
        throw std::domain_error("risky_zcb: inputs outside valid ranges");
    }
    return (1.0 - (1.0 - recovery) * pd) * df;
}

SurvivalCurve scenario_survival_curve(const DtdState& state, const MarketPdCurve& curve,
                                      const DtdParams& params, double maturity,
                                      double payment_interval) {
    if (!state.alive) {
        throw std::domain_error("scenario_survival_curve: state is not alive");
    }
    SurvivalCurve sc;
    sc.base_time = state.t;
    const int n = static_cast<int>(std::floor((maturity - state.t) / payment_interval + 1e-9));
    for (int k = 1; k <= n; ++k) {
        const double t_k = state.t + k * payment_interval;
        sc.times.push_back(t_k);
        sc.survival.push_back(1.0 - bucket_default_prob(state, curve, params, t_k));
    }
    if (sc.times.empty() || sc.times.back() < maturity - 1e-9) {
        sc.times.push_back(maturity);
        sc.survival.push_back(1.0 - bucket_default_prob(state, curve, params, maturity));
    }
    return sc;
}

namespace {

struct CdsLegs {
    double protection = 0.0; // (1-R)-free: sum DF (pS_{k-1} - pS_k)
    double annuity = 0.0;    // delta sum DF (pS_{k-1} + pS_k) / 2
};

CdsLegs cds_legs(double t, double T, const SurvivalCurve& sc, const DiscountCurve& disc,
                 double delta) {
    if (sc.times.empty()) {
        throw std::invalid_argument("cds pricing: empty survival grid");
    }
    if (std::fabs(sc.base_time - t) > 1e-9) {
        throw std::invalid_argument("cds pricing: survival curve base time does not match t");
    }
    const double df_t = disc.df(t);
    CdsLegs legs;
    double ps_prev = 1.0;
    bool any = false;
    for (std::size_t k = 0; k < sc.times.size(); ++k) {
        const double t_k = sc.times[k];
        if (t_k <= t + 1e-12 || t_k > T + 1e-9) {
            continue;
        }
        const double ps_k = sc.survival[k];
        if (ps_k > ps_prev + 1e-12) {
            throw std::invalid_argument("cds pricing: survival pillars are not non-increasing");
        }
        const double df = disc.df(t_k) / df_t;
        legs.protection += df * (ps_prev - ps_k);
        legs.annuity += delta * df * (ps_prev + ps_k) / 2.0;
        ps_prev = ps_k;
        any = true;
    }
    if (!any) {
        throw std::invalid_argument("cds pricing: no payment dates in (t, T]");
    }
    return legs;
}

} // namespace

double cds_par_spread(double t, double T, const SurvivalCurve& sc, const DiscountCurve& disc,
                      double recovery, double delta) {
    const CdsLegs legs = cds_legs(t, T, sc, disc, delta);
    if (legs.annuity <= 0.0) {
        throw std::invalid_argument("cds_par_spread: non-positive annuity");
    }
    return (1.0 - recovery) * legs.protection / legs.annuity;
}

double cds_mtm(const Instrument& inst, double t, const SurvivalCurve& sc,
               const DiscountCurve& disc) {
    if (t >= inst.maturity - 1e-12) {
        throw std::invalid_argument("cds_mtm: instrument " + inst.deal_id + " has matured");
    }
    const CdsLegs legs = cds_legs(t, inst.maturity, sc, disc, inst.payment_interval);
    const double value =
        (1.0 - inst.recovery) * legs.protection - inst.contract_spread * legs.annuity;
    return value * inst.notional * inst.direction;
}

namespace {

class CurveCache {
  public:
    CurveCache(std::size_t n_names) : curves_(n_names), built_(n_names, 0) {}

    const SurvivalCurve& get(const Instrument& deal, const DtdState& state,
                             const PricingContext& ctx, double horizon) {
        const std::size_t idx = static_cast<std::size_t>(deal.name_index);
        if (!built_[idx]) {
            curves_[idx] = scenario_survival_curve(state, *ctx.curves[idx], ctx.params[idx],
                                                   horizon, deal.payment_interval);
            built_[idx] = 1;
        }
        return curves_[idx];
    }

  private:
    std::vector<SurvivalCurve> curves_;
    std::vector<char> built_;
};

double deal_value(const Instrument& deal, double t, const DtdState& state,
                  const PricingContext& ctx, CurveCache& cache, double name_horizon) {
    if (!state.alive) {
        // Settlement enters exposure once, in the bucket the default occurred.
        if (!state.defaulted_this_bucket || t > deal.maturity + 1e-9) {
            return 0.0;
        }
        if (deal.kind == InstrumentKind::Cds) {
            return (1.0 - deal.recovery) * deal.notional * deal.direction;
        }
        return deal.recovery * deal.notional * deal.direction;
    }
    if (t >= deal.maturity - 1e-9) {
        return 0.0;
    }
    if (deal.kind == InstrumentKind::Cds) {
        const SurvivalCurve& sc = cache.get(deal, state, ctx, name_horizon);
        return cds_mtm(deal, t, sc, *ctx.disc);
    }
    const double pd =
        bucket_default_prob(state, *ctx.curves[deal.name_index], ctx.params[deal.name_index],
                            deal.maturity);
    const double df = ctx.disc->df(deal.maturity) / ctx.disc->df(t);
    return risky_zcb(pd, deal.recovery, df) * deal.notional * deal.direction;
}

// Longest deal maturity per referenced name; the shared survival curve for a
// name is built once out to that horizon.
std::vector<double> name_horizons(const std::vector<Instrument>& deals, std::size_t n_names) {
    std::vector<double> horizon(n_names, 0.0);
    for (const auto& deal : deals) {
        if (deal.name_index < 0 || static_cast<std::size_t>(deal.name_index) >= n_names) {
            throw std::invalid_argument("portfolio pricing: deal " + deal.deal_id +
                                        " references an unknown name");
        }
        horizon[deal.name_index] = std::max(horizon[deal.name_index], deal.maturity);
    }
    return horizon;
}

} // namespace

std::pair<double, double> portfolio_exposure(const std::vector<Instrument>& deals, double t,
                                             const std::vector<DtdState>& states,
                                             const PricingContext& ctx, bool netting) {
    const auto horizon = name_horizons(deals, states.size());
    CurveCache cache(states.size());
    double net = 0.0;
    double pos = 0.0;
    double neg = 0.0;
    for (const auto& deal : deals) {
        const double w = deal_value(deal, t, states[deal.name_index], ctx, cache,
                                    horizon[deal.name_index]);
        net += w;
        pos += std::max(w, 0.0);
        neg += std::max(-w, 0.0);
    }
    if (netting) {
        return {std::max(net, 0.0), std::max(-net, 0.0)};
    }
    return {pos, neg};
}

double portfolio_value(const std::vector<Instrument>& deals, double t,
                       const std::vector<DtdState>& states, const PricingContext& ctx) {
    const auto horizon = name_horizons(deals, states.size());
    CurveCache cache(states.size());
    double net = 0.0;
    for (const auto& deal : deals) {
        net += deal_value(deal, t, states[deal.name_index], ctx, cache,
                          horizon[deal.name_index]);
    }
    return net;
}

} // namespace dtdcva

