#include "dtdcva/dtd_core.hpp"

#include "dtdcva/errors.hpp"
#include "dtdcva/mathkit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dtdcva {

namespace {

constexpr double kBarrierEpsilon = 1e-12;
constexpr double kResidualTol = 1e-13;

} // namespace

double DtdParams::lambda(double t) const { return kappa == 0.0 ? 1.0 : std::exp(kappa * t); }

double transition_density(double y0, double y, double tbar, double theta_bar) {
    if (!(y0 > 0.0) || !(tbar > 0.0)) {
        throw std::domain_error("transition_density: y0 and tbar must be positive");
    }
    if (!(y > 0.0)) {
        throw std::domain_error("transition_density: y must be positive");
    }
    const double z = y - y0 - theta_bar * tbar;
    const double kernel = std::exp(-z * z / (2.0 * tbar)) / std::sqrt(2.0 * M_PI * tbar);
    const double image = -std::expm1(-2.0 * y * y0 / tbar);
    return kernel * image;
}

double default_prob(double y0, double tbar, double theta_bar) {
    if (!(y0 > 0.0) || !(tbar > 0.0)) {
        throw std::domain_error("default_prob: y0 and tbar must be positive");
    }
    const double s = std::sqrt(tbar);
    if (theta_bar == 0.0) {
        return 2.0 * norm_cdf(-y0 / s);
    }
    return norm_cdf(-(y0 + theta_bar * tbar) / s) +
           std::exp(-2.0 * y0 * theta_bar) * norm_cdf(-(y0 - theta_bar * tbar) / s);
}

double bucket_default_prob(const DtdState& state, const MarketPdCurve& curve,
                           const DtdParams& params, double T) {
    if (!state.alive) {
        throw std::domain_error("bucket_default_prob: state is not alive");
    }
    if (!(T > state.t)) {
        throw std::domain_error("bucket_default_prob: T must exceed the state time");
    }
    const double dvar = bucket_variance(curve, params.y0, state.t, T);
    const double q = params.lambda(state.t) * state.y / std::sqrt(dvar);
    return 2.0 * norm_cdf(-q);
}

double survival_quantile(double q) {
    if (q >= 8.0) {
        return tail_inv_asymptotic(q, 1.0);
    }
    return -norm_inv(clamp_probability(2.0 * norm_cdf(-q)));
}

double spread_vol(const MarketPdCurve& curve, double y0, double t) {
    if (!(y0 > 0.0)) {
        throw std::domain_error("spread_vol: y0 must be positive");
    }
    const double pd = curve.default_prob(t);
    if (pd <= 0.0 || pd >= 1.0) {
        std::ostringstream msg;
        msg << "spread_vol: market PD " << pd << " at t=" << t << " is degenerate";
        throw DegenerateCurveError(msg.str());
    }
    const double x = norm_inv(pd / 2.0); // negative for pd < 1
    return std::sqrt(2.0 / M_PI) * (-x) / (y0 * pd) * std::exp(-0.5 * x * x);
}

double calibrate_y0(const MarketPdCurve& curve, const SpreadVolQuote& vol) {
    if (!(vol.sigma_m > 0.0)) {
        throw std::domain_error("calibrate_y0: sigma_m must be positive");
    }
    const double pd = curve.default_prob(vol.tenor);
    if (pd <= 0.0 || pd >= 1.0) {
        std::ostringstream msg;
        msg << "calibrate_y0: market PD " << pd << " at t=" << vol.tenor << " is degenerate";
        throw DegenerateCurveError(msg.str());
    }
    const double x = norm_inv(pd / 2.0);
    return std::sqrt(2.0 / M_PI) * (-x) / (pd * vol.sigma_m) * std::exp(-0.5 * x * x);
}

DtdState advance_dtd_with_variance(const DtdState& state, double u, double dvar,
                                   const DtdParams& params, double dt) {
    if (!state.alive) {
        throw std::domain_error("advance_dtd: state is not alive");
    }
    if (!(u >= 0.0) || u > 1.0) {
        throw std::domain_error("advance_dtd: u outside [0,1]");
    }
    if (!(dt > 0.0) || !(dvar > 0.0)) {
        throw std::domain_error("advance_dtd: dt and bucket variance must be positive");
    }

    const double s = std::sqrt(dvar);
    const double lam_t = params.lambda(state.t);
    const double lam_next = params.lambda(state.t + dt);
    const double c = lam_t * state.y; // lambda_t y_t
    const double tail = norm_cdf(-c / s);
    const double survival = 1.0 - 2.0 * tail;

    DtdState next = state;
    next.t = state.t + dt;
    next.defaulted_this_bucket = false;

    if (u >= survival) {
        next.alive = false;
        next.defaulted_this_bucket = true;
        next.y = 0.0;
        return next;
    }
    if (u == 0.0) {
        next.y = kBarrierEpsilon;
        return next;
    }

    // CDF of the surviving transition in y' = y_{t+dt}; strictly increasing
    // from 0 at the barrier to `survival` at infinity.
    auto cdf = [&](double y_next) {
        const double a = (lam_next * y_next - c) / s;
        const double b = (lam_next * y_next + c) / s;
        return norm_cdf(a) + norm_cdf(-b) - 2.0 * tail;
    };
    auto pdf = [&](double y_next) {
        const double a = (lam_next * y_next - c) / s;
        const double b = (lam_next * y_next + c) / s;
        return (norm_pdf(a) - norm_pdf(b)) * lam_next / s;
    };

    double lo = kBarrierEpsilon;
    double hi = (c + 10.0 * s) / lam_next;
    for (int grow = 0; cdf(hi) <= u; ++grow) {
        hi *= 2.0;
        if (grow > 200) {
            throw std::runtime_error("advance_dtd: failed to bracket the transition root");
        }
    }

    // First guess from the dominant Gaussian term, then Newton steps kept
    // inside the bisection bracket.
    double x;
    {
        const double target = u + 2.0 * tail;
        x = (target > 0.0 && target < 1.0) ? (c + s * norm_inv(target)) / lam_next
                                           : 0.5 * (lo + hi);
        if (!(x > lo) || !(x < hi)) {
            x = 0.5 * (lo + hi);
        }
    }
    double resid = cdf(x) - u;
    for (int it = 0; it < 200 && std::fabs(resid) > kResidualTol; ++it) {
        (resid < 0.0 ? lo : hi) = x;
        const double deriv = pdf(x);
        double step_x = x - resid / deriv;
        if (!(deriv > 0.0) || !(step_x > lo) || !(step_x < hi)) {
            step_x = 0.5 * (lo + hi);
        }
        x = step_x;
        resid = cdf(x) - u;
        if (hi - lo < 1e-15 * std::max(1.0, x)) {
            break;
        }
    }
    next.y = x;
    return next;
}

DtdState advance_dtd(const DtdState& state, double u, const MarketPdCurve& curve,
                     const DtdParams& params, double dt) {
    if (!state.alive) {
        throw std::domain_error("advance_dtd: state is not alive");
    }
    if (!(dt > 0.0)) {
        throw std::domain_error("advance_dtd: dt must be positive");
    }
    const double dvar = bucket_variance(curve, params.y0, state.t, state.t + dt);
    return advance_dtd_with_variance(state, u, dvar, params, dt);
}

} // namespace dtdcva
