#pragma once

#include "dtdcva/copula.hpp"
#include "dtdcva/dtd_core.hpp"
#include "dtdcva/market_data.hpp"
#include "dtdcva/pricing.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dtdcva {

enum class SimulationMode { Conditional, Unconditional };

/// Risk-neutral rating transition probabilities per time bucket.
/// Labels are ordered best to worst; rows are probability vectors.
struct TransitionMatrix {
    std::vector<std::string> labels;
    std::vector<double> probs; // row-major square

    void validate() const;
    std::size_t index(const std::string& label) const;
};

struct TriggerConfig {
    TransitionMatrix matrix;
    std::string trigger_rating;
    std::string initial_rating_cpty;
    std::string initial_rating_inv;
};

struct CvaRunConfig {
    long n_scenarios = 10000;
    std::vector<double> grid; // bucket edges, starting at 0, strictly increasing
    SimulationMode mode = SimulationMode::Conditional;
    bool netting = true;
    std::uint64_t seed = 1;
    double kappa = 0.0;
    unsigned n_threads = 0; // 0 = hardware concurrency
    std::optional<TriggerConfig> trigger;

    void validate() const;
};

/// Calibrated market data for one credit name.
struct NameSetup {
    std::string id;
    MarketPdCurve curve;
    DtdParams params;
};

/// Everything a run needs besides the run controls. Name 0 is the
/// counterparty, name 1 the investor.
struct EngineInputs {
    DiscountCurve disc;
    std::vector<NameSetup> names;
    CorrelationStructure structure;
    std::vector<Instrument> portfolio;
    PartyConfig parties;
};

struct BucketStats {
    double t = 0.0;
    double cva_mean = 0.0;
    double cva_se = 0.0;
    double p12_i_mean = 0.0;
    double p12_ii_mean = 0.0;
    long defaults_cpty = 0;
    long defaults_inv = 0;
};

struct CvaReport {
    std::vector<BucketStats> buckets;
    double total = 0.0;
    double total_se = 0.0;
    long n_scenarios = 0;
    SimulationMode mode = SimulationMode::Conditional;
    std::uint64_t seed = 0;
    long trigger_stops = 0;
    long aborted = 0;
    long defaults_cpty_total = 0;
    long defaults_inv_total = 0;
};

/// One scenario's bucket-level output (exposed for tests and diagnostics).
struct ScenarioResult {
    std::vector<double> cva;     // discounted contribution per bucket
    std::vector<double> p12_i;   // conditional: analytic weights; unconditional: indicators
    std::vector<double> p12_ii;
    std::vector<char> default_cpty; // main-path default flags per bucket
    std::vector<char> default_inv;
    bool trigger_stop = false;
};

/// Joint bucket probabilities under the copula:
///   p12_I  = N2(-N^{-1}(p_S1), N^{-1}(p_S2); -L21)   (1 defaults, 2 survives)
///   p12_II = N2(N^{-1}(p_S1), -N^{-1}(p_S2); -L21)   (2 defaults, 1 survives)
/// The survival quantiles come from q (deep-tail kernel at q >= 8).
std::pair<double, double> joint_bucket_weights(double p_s1, double p_s2, double q1, double q2,
                                               double l21);

enum class TriggerDecision { Continue, Stop };

/// The rating-trigger decision table: both parties breach -> stop;
/// counterparty breach with MtM > 0 -> stop; investor breach with
/// MtM < 0 -> stop; otherwise continue.
TriggerDecision rating_trigger_step(double u1, double u2, double p_m1, double p_m2, double mtm);

class CvaEngine {
  public:
    CvaEngine(CvaRunConfig config, EngineInputs inputs);

    const CvaRunConfig& config() const { return config_; }
    const EngineInputs& inputs() const { return inputs_; }

    ScenarioResult run_scenario_conditional(long scenario_index) const;
    ScenarioResult run_scenario_unconditional(long scenario_index) const;

    /// Full Monte Carlo run. Deterministic for a given (seed, config,
    /// inputs) regardless of the number of worker threads. Throws if more
    /// than 0.1% of scenarios abort.
    CvaReport run() const;

  private:
    struct Workspace;

    void simulate(long scenario_index, SimulationMode mode, ScenarioResult& out,
                  Workspace& ws) const;
    double bucket_dvar(std::size_t name, std::size_t bucket) const;

    CvaRunConfig config_;
    EngineInputs inputs_;
    PricingContext ctx_;
    std::vector<std::vector<double>> tbar_;         // per name, at grid edges
    std::vector<double> df_edges_;                  // D(0, t_l)
    std::vector<std::vector<double>> trigger_pm_;   // per party (0,1), per bucket
};

struct DefaultCorrResult {
    double value = 0.0;
    double se = 0.0; // zero in analytic mode
};

enum class DefaultCorrMode { Analytic, Simulated };

/// Default correlation of two names over one horizon from marginal PDs
/// p1, p2 (at the horizon) and asset correlation rho:
///   (N2(N^{-1}(p1), N^{-1}(p2); rho) - p1 p2) / sqrt(p1 q1 p2 q2).
/// Simulated mode estimates the same quantity from the engine's copula
/// default indicators over a single bucket spanning the horizon; the
/// standard error comes from the delta method.
DefaultCorrResult default_correlation(double p1, double p2, double rho_asset, double horizon,
                                      DefaultCorrMode mode, long n_scenarios = 1000000,
                                      std::uint64_t seed = 1);

struct MartingaleCheckpoint {
    double t = 0.0;
    double mean = 0.0;      // E[p_S(y_t, t, T)], absorbed paths contributing 0
    double se = 0.0;
    double reference = 0.0; // p_S(0, T)
};

/// Simulates paths on the given bucket grid up to T and evaluates the
/// forward survival probability at each checkpoint (which must lie on the
/// grid). The martingale property makes every mean equal its reference.
std::vector<MartingaleCheckpoint> martingale_test(const MarketPdCurve& curve,
                                                  const DtdParams& params,
                                                  const std::vector<double>& grid, double T,
                                                  const std::vector<double>& checkpoints,
                                                  long n_paths, std::uint64_t seed,
                                                  unsigned n_threads = 0);

} // namespace dtdcva
