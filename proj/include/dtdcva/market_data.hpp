#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace dtdcva {

/// Discount factors D(0,t); log-linear interpolation between pillars,
/// flat-forward extrapolation past the last pillar.
class DiscountCurve {
  public:
    /// Pillars as (time, discount factor), time > 0 strictly increasing,
    /// factors in (0,1] and non-increasing. D(0,0) = 1 is implicit.
    static DiscountCurve from_pillars(std::vector<std::pair<double, double>> pillars);

    double df(double t) const;
    double forward_df(double t, double T) const { return df(T) / df(t); }
    double max_time() const { return times_.empty() ? 0.0 : times_.back(); }

    DiscountCurve() = default; // empty placeholder; assign via from_pillars

  private:
    std::vector<double> times_;
    std::vector<double> log_df_;
};

/// Par CDS quotes for one credit name.
struct CdsQuoteSet {
    std::vector<double> tenors;  // years, strictly increasing
    std::vector<double> spreads; // decimal per annum
    double recovery = 0.4;
    double payment_interval = 0.25;

    void validate() const;
};

/// Annualized CDS spread-return volatility at one tenor (canonically 5y).
struct SpreadVolQuote {
    double tenor = 5.0;
    double sigma_m = 0.0;
};

/// Cumulative market risk-neutral default probabilities p_D(t) with
/// piecewise-constant hazard between pillars and p_D(0) = 0.
///
/// Pillar PDs must be non-decreasing; the consumers that require strict
/// monotonicity (effective_time, bucket_variance) reject flat or zero
/// segments with DegenerateCurveError at evaluation time.
class MarketPdCurve {
  public:
    static MarketPdCurve from_pillars(std::vector<std::pair<double, double>> pillars);

    double default_prob(double t) const;
    double survival(double t) const { return 1.0 - default_prob(t); }
    const std::vector<std::pair<double, double>>& pillars() const { return pillars_; }
    double max_time() const { return pillars_.empty() ? 0.0 : pillars_.back().first; }

    MarketPdCurve() = default; // empty placeholder; assign via from_pillars

  private:
    std::vector<std::pair<double, double>> pillars_;
    std::vector<double> log_survival_;
};

/// Bootstraps the market PD curve from par CDS quotes: sequential root-solve
/// per pillar with piecewise-constant hazard, quarterly premium grid with
/// accrual-on-default via the survival average in the premium leg.
/// Re-pricing the quotes off the result reproduces them within 1e-10.
MarketPdCurve bootstrap_pd_curve(const CdsQuoteSet& quotes, const DiscountCurve& disc);

/// Time change tbar(t) = y0^2 / [norm_inv(p_D(t)/2)]^2; tbar(0) = 0 by
/// continuous extension. Throws DegenerateCurveError where p_D(t) is 0 or >= 1.
double effective_time(const MarketPdCurve& curve, double y0, double t);

/// Variance of the driving motion over the bucket (t, T]:
/// tbar(T) - tbar(t), additive over adjacent buckets. Throws
/// DegenerateCurveError when the increment is not strictly positive.
double bucket_variance(const MarketPdCurve& curve, double y0, double t, double T);

} // namespace dtdcva
