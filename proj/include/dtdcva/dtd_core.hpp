#pragma once

#include "dtdcva/market_data.hpp"

#include <string>

namespace dtdcva {

/// Calibration constants of one name's distance-to-default process.
/// lambda_t = exp(kappa * t) is always derived, never stored.
struct DtdParams {
    double y0 = 1.0;        // initial scaled distance-to-default, > 0
    double theta_bar = 0.0; // scaled drift (canonical 0)
    double kappa = 0.0;     // mean-reversion speed (canonical 0)

    double lambda(double t) const;
};

/// A name's simulation state. Defaulted names never transition again.
struct DtdState {
    int name = 0;
    double y = 0.0; // scaled distance-to-default, > 0 while alive
    double t = 0.0; // years
    bool alive = true;
    bool defaulted_this_bucket = false;
};

/// Transition density of the absorbed process at effective time tbar:
/// Gaussian kernel times the absorbing-barrier image term
/// [1 - exp(-2 y y0 / tbar)] (kappa = 0 form).
double transition_density(double y0, double y, double tbar, double theta_bar);

/// First-passage default probability at effective time tbar:
/// Phi(-(y0 + th*tbar)/sqrt(tbar)) + exp(-2 y0 th) Phi(-(y0 - th*tbar)/sqrt(tbar));
/// reduces to 2 Phi(-y0/sqrt(tbar)) for theta_bar = 0.
double default_prob(double y0, double tbar, double theta_bar);

/// Bucket default probability p_D(t,T) = 2 Phi(-y_t lambda_t / sqrt(dvar))
/// for an alive state, with dvar the time-change variance over (t, T].
double bucket_default_prob(const DtdState& state, const MarketPdCurve& curve,
                           const DtdParams& params, double T);

/// N^{-1}(p_S) for p_S = 1 - 2 Phi(-q), computed from q so the complement
/// never cancels; switches to the deep-tail asymptotic kernel at q >= 8.
double survival_quantile(double q);

/// Model-implied instantaneous CDS spread volatility at time t (absolute
/// value of the signed closed form).
double spread_vol(const MarketPdCurve& curve, double y0, double t);

/// Closed-form y0 that makes spread_vol match the quoted market volatility
/// at the quote tenor. Exact inverse of spread_vol.
double calibrate_y0(const MarketPdCurve& curve, const SpreadVolQuote& vol);

/// Advances an alive state over (t, t+dt] given a uniform draw u.
/// u >= conditional bucket survival means default (closed default region);
/// otherwise the new y solves the transition CDF equation
///   u = Phi((l' y' - l y)/s) + Phi(-(l' y' + l y)/s) - 2 Phi(-l y / s)
/// to residual <= 1e-12, with l = lambda(t), l' = lambda(t+dt), s = sqrt(dvar).
DtdState advance_dtd(const DtdState& state, double u, const MarketPdCurve& curve,
                     const DtdParams& params, double dt);

/// advance_dtd on a precomputed bucket variance (engine hot path).
DtdState advance_dtd_with_variance(const DtdState& state, double u, double dvar,
                                   const DtdParams& params, double dt);

} // namespace dtdcva
