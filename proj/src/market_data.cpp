#include "dtdcva/market_data.hpp"

#include "dtdcva/errors.hpp"
#include "dtdcva/mathkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dtdcva {

DiscountCurve DiscountCurve::from_pillars(std::vector<std::pair<double, double>> pillars) {
    if (pillars.empty()) {
        throw ValidationError("discount curve: no pillars");
    }
    std::sort(pillars.begin(), pillars.end());
    DiscountCurve curve;
    double prev_t = 0.0;
    double prev_df = 1.0;
    for (const auto& [t, df] : pillars) {
        if (t <= prev_t) {
            throw ValidationError("discount curve: pillar times must be strictly increasing and positive");
        }
        if (!(df > 0.0) || df > 1.0 || df > prev_df) {
            std::ostringstream msg;
            msg << "discount curve: factor " << df << " at t=" << t
                << " outside (0,1] or increasing";
            throw ValidationError(msg.str());
        }
        curve.times_.push_back(t);
        curve.log_df_.push_back(std::log(df));
        prev_t = t;
        prev_df = df;
    }
    return curve;
}

double DiscountCurve::df(double t) const {
    if (t <= 0.0) {
        return 1.0;
    }
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    if (hi == times_.size()) {
        // flat forward rate beyond the last pillar
        const std::size_t n = times_.size();
        const double rate = (n == 1) ? -log_df_[0] / times_[0]
                                     : -(log_df_[n - 1] - log_df_[n - 2]) /
                                           (times_[n - 1] - times_[n - 2]);
        return std::exp(log_df_.back() - rate * (t - times_.back()));
    }
    const double t_hi = times_[hi];
    const double l_hi = log_df_[hi];
    const double t_lo = (hi == 0) ? 0.0 : times_[hi - 1];
    const double l_lo = (hi == 0) ? 0.0 : log_df_[hi - 1];
    const double w = (t - t_lo) / (t_hi - t_lo);
    return std::exp(l_lo + w * (l_hi - l_lo));
}

void CdsQuoteSet::validate() const {
    if (tenors.empty() || tenors.size() != spreads.size()) {
        throw ValidationError("cds quotes: empty or mismatched tenor/spread vectors");
    }
    double prev = 0.0;
    for (std::size_t i = 0; i < tenors.size(); ++i) {
        if (tenors[i] <= prev) {
            throw ValidationError("cds quotes: tenors must be strictly increasing and positive");
        }
        if (!(spreads[i] >= 0.0)) {
            throw ValidationError("cds quotes: spreads must be non-negative");
        }
        prev = tenors[i];
    }
    if (recovery < 0.0 || recovery >= 1.0 + 1e-12) {
        // R = 1 is allowed to enter so the bootstrapper can raise the
        // arbitrage error the quote set implies.
        if (recovery < 0.0 || recovery > 1.0) {
            throw ValidationError("cds quotes: recovery outside [0,1]");
        }
    }
    if (!(payment_interval > 0.0)) {
        throw ValidationError("cds quotes: payment interval must be positive");
    }
    for (double t : tenors) {
        const double periods = t / payment_interval;
        if (std::fabs(periods - std::lround(periods)) > 1e-9) {
            std::ostringstream msg;
            msg << "cds quotes: tenor " << t << " is not a multiple of the payment interval "
                << payment_interval;
            throw ValidationError(msg.str());
        }
    }
}

MarketPdCurve MarketPdCurve::from_pillars(std::vector<std::pair<double, double>> pillars) {
    if (pillars.empty()) {
        throw ValidationError("pd curve: no pillars");
    }
    std::sort(pillars.begin(), pillars.end());
    MarketPdCurve curve;
    double prev_t = 0.0;
    double prev_p = 0.0;
    for (const auto& [t, p] : pillars) {
        if (t <= prev_t) {
            throw ValidationError("pd curve: pillar times must be strictly increasing and positive");
        }
        if (p < 0.0 || p >= 1.0 || p < prev_p) {
            std::ostringstream msg;
            msg << "pd curve: cumulative PD " << p << " at t=" << t
                << " outside [0,1) or decreasing";
            throw ValidationError(msg.str());
        }
        curve.pillars_.emplace_back(t, p);
        curve.log_survival_.push_back(std::log1p(-p));
        prev_t = t;
        prev_p = p;
    }
    return curve;
}

double MarketPdCurve::default_prob(double t) const {
    if (t <= 0.0) {
        return 0.0;
    }
    const std::size_t n = pillars_.size();
    std::size_t hi = 0;
    while (hi < n && pillars_[hi].first < t) {
        ++hi;
    }
    double t_lo, ls_lo, t_hi, ls_hi;
    if (hi == n) {
        // extrapolate with the last segment's hazard
        t_hi = pillars_[n - 1].first;
        ls_hi = log_survival_[n - 1];
        t_lo = (n == 1) ? 0.0 : pillars_[n - 2].first;
        ls_lo = (n == 1) ? 0.0 : log_survival_[n - 2];
        const double hazard = -(ls_hi - ls_lo) / (t_hi - t_lo);
        return -std::expm1(ls_hi - hazard * (t - t_hi));
    }
    t_hi = pillars_[hi].first;
    ls_hi = log_survival_[hi];
    t_lo = (hi == 0) ? 0.0 : pillars_[hi - 1].first;
    ls_lo = (hi == 0) ? 0.0 : log_survival_[hi - 1];
    const double w = (t - t_lo) / (t_hi - t_lo);
    return -std::expm1(ls_lo + w * (ls_hi - ls_lo));
}

namespace {

// Par spread of a protection leg vs quarterly premium leg with
// accrual-on-default, for survival given by exp(ls(t)) piecewise linear in
// the hazard sense on the supplied (time, log-survival) pillars.
double par_spread_from_log_survival(const std::vector<double>& times,
                                    const std::vector<double>& log_surv, double maturity,
                                    double delta, double recovery, const DiscountCurve& disc) {
    auto surv = [&](double t) -> double {
        if (t <= 0.0) {
            return 1.0;
        }
        std::size_t hi = 0;
        while (hi + 1 < times.size() && times[hi] < t) {
            ++hi;
        }
        const double t_hi = times[hi];
        const double ls_hi = log_surv[hi];
        const double t_lo = (hi == 0) ? 0.0 : times[hi - 1];
        const double ls_lo = (hi == 0) ? 0.0 : log_surv[hi - 1];
        const double w = (t - t_lo) / (t_hi - t_lo);
        return std::exp(ls_lo + w * (ls_hi - ls_lo));
    };

    double protection = 0.0;
    double premium = 0.0;
    const int n_periods = static_cast<int>(std::lround(maturity / delta));
    double ps_prev = 1.0;
    for (int k = 1; k <= n_periods; ++k) {
        const double t_k = k * delta;
        const double ps_k = surv(t_k);
        const double df = disc.df(t_k);
        protection += df * (ps_prev - ps_k);
        premium += df * (ps_prev + ps_k);
        ps_prev = ps_k;
    }
    if (premium <= 0.0) {
        throw ArbitrageError("cds pricing: premium leg annuity is non-positive");
    }
    return 2.0 * (1.0 - recovery) * protection / (delta * premium);
}

} // namespace

MarketPdCurve bootstrap_pd_curve(const CdsQuoteSet& quotes, const DiscountCurve& disc) {
    quotes.validate();
    if (disc.max_time() + 1e-9 < quotes.tenors.back()) {
        throw ValidationError("bootstrap: discount curve does not cover the longest CDS tenor");
    }
    const double delta = quotes.payment_interval;

    std::vector<double> times;
    std::vector<double> log_surv;
    std::vector<std::pair<double, double>> pd_pillars;

    for (std::size_t j = 0; j < quotes.tenors.size(); ++j) {
        const double tenor = quotes.tenors[j];
        const double quote = quotes.spreads[j];
        const double t_prev = times.empty() ? 0.0 : times.back();
        const double ls_prev = log_surv.empty() ? 0.0 : log_surv.back();

        auto spread_for_hazard = [&](double hazard) {
            std::vector<double> trial_t = times;
            std::vector<double> trial_ls = log_surv;
            trial_t.push_back(tenor);
            trial_ls.push_back(ls_prev - hazard * (tenor - t_prev));
            return par_spread_from_log_survival(trial_t, trial_ls, tenor, delta,
                                                quotes.recovery, disc);
        };

        double lo = 0.0;
        double hi = 20.0;
        const double f_lo = spread_for_hazard(lo) - quote;
        const double f_hi = spread_for_hazard(hi) - quote;
        double hazard;
        if (quote == 0.0 && f_lo == 0.0) {
            hazard = 0.0;
        } else if (f_lo > 0.0) {
            std::ostringstream msg;
            msg << "bootstrap: pillar " << tenor
                << "y quote lies below the spread implied by earlier pillars (arbitrage)";
            throw ArbitrageError(msg.str());
        } else if (f_hi < 0.0) {
            std::ostringstream msg;
            msg << "bootstrap: pillar " << tenor << "y quote " << quote
                << " unreachable (protection leg too small; recovery " << quotes.recovery << ")";
            throw ArbitrageError(msg.str());
        } else {
            for (int it = 0; it < 200; ++it) {
                hazard = 0.5 * (lo + hi);
                const double f_mid = spread_for_hazard(hazard) - quote;
                if (std::fabs(f_mid) <= 1e-14 * std::max(quote, 1e-6)) {
                    break;
                }
                (f_mid < 0.0 ? lo : hi) = hazard;
            }
            hazard = 0.5 * (lo + hi);
        }

        const double ls = ls_prev - hazard * (tenor - t_prev);
        times.push_back(tenor);
        log_surv.push_back(ls);
        const double pd = -std::expm1(ls);
        if (pd < 0.0 || pd >= 1.0) {
            std::ostringstream msg;
            msg << "bootstrap: pillar " << tenor << "y implies cumulative PD " << pd
                << " outside [0,1)";
            throw ArbitrageError(msg.str());
        }
        pd_pillars.emplace_back(tenor, pd);
    }
    return MarketPdCurve::from_pillars(std::move(pd_pillars));
}

double effective_time(const MarketPdCurve& curve, double y0, double t) {
    if (!(y0 > 0.0)) {
        throw std::domain_error("effective_time: y0 must be positive");
    }
    if (t < 0.0) {
        throw std::domain_error("effective_time: t must be non-negative");
    }
    if (t == 0.0) {
        return 0.0;
    }
    const double pd = curve.default_prob(t);
    if (pd <= 0.0) {
        std::ostringstream msg;
        msg << "effective_time: market PD is zero at t=" << t;
        throw DegenerateCurveError(msg.str());
    }
    if (pd >= 1.0) {
        std::ostringstream msg;
        msg << "effective_time: market PD is one at t=" << t;
        throw DegenerateCurveError(msg.str());
    }
    const double x = norm_inv(pd / 2.0);
    return y0 * y0 / (x * x);
}

double bucket_variance(const MarketPdCurve& curve, double y0, double t, double T) {
    if (!(t >= 0.0) || !(T > t)) {
        throw std::domain_error("bucket_variance: requires 0 <= t < T");
    }
    const double var = effective_time(curve, y0, T) - effective_time(curve, y0, t);
    if (!(var > 0.0)) {
        std::ostringstream msg;
        msg << "bucket_variance: non-positive variance over (" << t << ", " << T
            << "] (flat or non-monotone market PD)";
        throw DegenerateCurveError(msg.str());
    }
    return var;
}

} // namespace dtdcva
