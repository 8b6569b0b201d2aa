#include "dtdcva/cva_engine.hpp"

#include "dtdcva/errors.hpp"
#include "dtdcva/mathkit.hpp"
#include "dtdcva/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dtdcva {

namespace {

// Substream tags keying the counter-based streams per (scenario, bucket).
enum Substream : std::uint32_t {
    kSubCaseOneU = 0,
    kSubCaseOneK = 1,
    kSubCaseOneEps = 2,
    kSubCaseTwoU = 3,
    kSubCaseTwoK = 4,
    kSubCaseTwoEps = 5,
    kSubMainK = 6,
    kSubMainEps = 7,
    kSubPath = 8,
};

// Conditional contributions weighted below this are smaller than 1e-12 of
// notional; skip building the world for them.
constexpr double kWeightFloor = 1e-14;

double sample_se(double sum, double sumsq, long n) {
    if (n < 2) {
        return 0.0;
    }
    const double var = (sumsq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
}

// Welford accumulator; merging in a fixed order keeps runs bit-identical
// across thread counts and avoids the cancellation of sum-of-squares.
struct RunningMoments {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const RunningMoments& o) {
        if (o.n == 0) {
            return;
        }
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const long total = n + o.n;
        mean += d * static_cast<double>(o.n) / static_cast<double>(total);
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                         static_cast<double>(total);
        n = total;
    }
    double se() const {
        if (n < 2) {
            return 0.0;
        }
        return std::sqrt(std::max(m2, 0.0) / static_cast<double>(n - 1) /
                         static_cast<double>(n));
    }
};

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace

void TransitionMatrix::validate() const {
    const std::size_t m = labels.size();
    if (m == 0 || probs.size() != m * m) {
        throw ValidationError("transition matrix: empty or non-square");
    }
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double p = probs[i * m + j];
            if (p < 0.0 || p > 1.0) {
                throw ValidationError("transition matrix: probability outside [0,1] in row " +
                                      labels[i]);
            }
            row += p;
        }
        if (std::fabs(row - 1.0) > 1e-12) {
            std::ostringstream msg;
            msg << "transition matrix: row " << labels[i] << " sums to " << row;
            throw ValidationError(msg.str());
        }
    }
}

std::size_t TransitionMatrix::index(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) {
            return i;
        }
    }
    throw ValidationError("transition matrix: unknown rating label '" + label + "'");
}

void CvaRunConfig::validate() const {
    if (n_scenarios < 1) {
        throw ValidationError("config: n_scenarios must be >= 1");
    }
    if (grid.size() < 2 || grid.front() != 0.0) {
        throw ValidationError("config: time grid must start at 0 and contain a bucket");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ValidationError("config: time grid must be strictly increasing");
        }
    }
    if (!std::isfinite(kappa)) {
        throw ValidationError("config: kappa must be finite");
    }
    if (trigger) {
        trigger->matrix.validate();
        const std::size_t trig = trigger->matrix.index(trigger->trigger_rating);
        if (trig == 0) {
            throw ValidationError("config: trigger rating cannot be the best rating");
        }
        trigger->matrix.index(trigger->initial_rating_cpty);
        trigger->matrix.index(trigger->initial_rating_inv);
    }
}

std::pair<double, double> joint_bucket_weights(double p_s1, double p_s2, double q1, double q2,
                                               double l21) {
    if (!(p_s1 > 0.0) || !(p_s1 < 1.0) || !(p_s2 > 0.0) || !(p_s2 < 1.0)) {
        throw std::domain_error("joint_bucket_weights: survival probabilities outside (0,1)");
    }
    if (!(std::fabs(l21) < 1.0)) {
        throw std::domain_error("joint_bucket_weights: |L21| must be < 1");
    }
    // deep-tail kernel inside the survival quantiles
    const double nq1 = survival_quantile(q1);
    const double nq2 = survival_quantile(q2);
    const double p12_i = bivar_norm_cdf(-nq1, nq2, -l21);
    const double p12_ii = bivar_norm_cdf(nq1, -nq2, -l21);
    return {p12_i, p12_ii};
}

TriggerDecision rating_trigger_step(double u1, double u2, double p_m1, double p_m2, double mtm) {
    const bool breach1 = u1 > p_m1;
    const bool breach2 = u2 > p_m2;
    if (breach1 && breach2) {
        return TriggerDecision::Stop;
    }
    if (breach1 && !breach2 && mtm > 0.0) {
        return TriggerDecision::Stop;
    }
    if (!breach1 && breach2 && mtm < 0.0) {
        return TriggerDecision::Stop;
    }
    return TriggerDecision::Continue;
}

struct CvaEngine::Workspace {
    std::vector<DtdState> states;
    std::vector<DtdState> world;
    std::vector<double> k;
    std::vector<double> eps;
};

CvaEngine::CvaEngine(CvaRunConfig config, EngineInputs inputs)
    : config_(std::move(config)), inputs_(std::move(inputs)) {
    config_.validate();
    inputs_.parties.validate();
    if (inputs_.names.size() < 2) {
        throw ValidationError("engine: need at least counterparty and investor names");
    }
    if (inputs_.structure.n_names != inputs_.names.size()) {
        throw ValidationError("engine: correlation structure covers a different name count");
    }
    for (const auto& deal : inputs_.portfolio) {
        deal.validate();
        if (deal.name_index < 0 ||
            static_cast<std::size_t>(deal.name_index) >= inputs_.names.size()) {
            throw ValidationError("engine: deal " + deal.deal_id +
                                  " references an unresolved name");
        }
    }

    // One global mean-reversion speed per run.
    for (auto& name : inputs_.names) {
        name.params.kappa = config_.kappa;
    }

    const std::size_t n_edges = config_.grid.size();
    df_edges_.resize(n_edges);
    for (std::size_t l = 0; l < n_edges; ++l) {
        df_edges_[l] = inputs_.disc.df(config_.grid[l]);
    }
    tbar_.resize(inputs_.names.size());
    for (std::size_t i = 0; i < inputs_.names.size(); ++i) {
        tbar_[i].resize(n_edges);
        for (std::size_t l = 0; l < n_edges; ++l) {
            tbar_[i][l] =
                effective_time(inputs_.names[i].curve, inputs_.names[i].params.y0,
                               config_.grid[l]);
        }
        for (std::size_t l = 1; l < n_edges; ++l) {
            if (!(tbar_[i][l] > tbar_[i][l - 1])) {
                std::ostringstream msg;
                msg << "engine: name " << inputs_.names[i].id
                    << " has a non-increasing time change over bucket " << l;
                throw DegenerateCurveError(msg.str());
            }
        }
    }

    ctx_.disc = &inputs_.disc;
    ctx_.curves.resize(inputs_.names.size());
    ctx_.params.resize(inputs_.names.size());
    for (std::size_t i = 0; i < inputs_.names.size(); ++i) {
        ctx_.curves[i] = &inputs_.names[i].curve;
        ctx_.params[i] = inputs_.names[i].params;
    }

    if (config_.trigger) {
        const auto& trig = *config_.trigger;
        const std::size_t m = trig.matrix.labels.size();
        const std::size_t trig_idx = trig.matrix.index(trig.trigger_rating);
        const std::size_t n_buckets = config_.grid.size() - 1;
        trigger_pm_.assign(2, std::vector<double>(n_buckets, 0.0));
        for (int party = 0; party < 2; ++party) {
            const std::string& r0 =
                party == 0 ? trig.initial_rating_cpty : trig.initial_rating_inv;
            std::vector<double> dist(m, 0.0);
            dist[trig.matrix.index(r0)] = 1.0;
            for (std::size_t l = 0; l < n_buckets; ++l) {
                std::vector<double> next(m, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    if (dist[i] == 0.0) {
                        continue;
                    }
                    for (std::size_t j = 0; j < m; ++j) {
                        next[j] += dist[i] * trig.matrix.probs[i * m + j];
                    }
                }
                dist = std::move(next);
                double pm = 0.0;
                for (std::size_t j = 0; j < trig_idx; ++j) {
                    pm += dist[j];
                }
                trigger_pm_[party][l] = pm;
            }
        }
    }
}

double CvaEngine::bucket_dvar(std::size_t name, std::size_t bucket) const {
    return tbar_[name][bucket] - tbar_[name][bucket - 1];
}

void CvaEngine::simulate(long scenario_index, SimulationMode mode, ScenarioResult& out,
                         Workspace& ws) const {
    const std::size_t n_names = inputs_.names.size();
    const std::size_t s = inputs_.structure.n_indices;
    const std::size_t n_buckets = config_.grid.size() - 1;
    const double l21 = inputs_.structure.l21();
    const auto scen = static_cast<std::uint32_t>(scenario_index);

    out.cva.assign(n_buckets, 0.0);
    out.p12_i.assign(n_buckets, 0.0);
    out.p12_ii.assign(n_buckets, 0.0);
    out.default_cpty.assign(n_buckets, 0);
    out.default_inv.assign(n_buckets, 0);
    out.trigger_stop = false;

    ws.states.resize(n_names);
    for (std::size_t i = 0; i < n_names; ++i) {
        ws.states[i] = DtdState{static_cast<int>(i), inputs_.names[i].params.y0, 0.0, true,
                                false};
    }
    ws.k.resize(s + 2);
    ws.eps.resize(n_names - 2);

    // Advances every alive name of `states` through bucket l using the
    // supplied joint draw; u_i = N(y_i) both decides default and drives the
    // transition root-solve.
    auto advance_world = [&](std::vector<DtdState>& states, const JointDraw& draw,
                             std::size_t l, double dt) {
        for (std::size_t i = 0; i < n_names; ++i) {
            DtdState& st = states[i];
            if (!st.alive) {
                st.t = config_.grid[l];
                continue;
            }
            const double y_draw = i == 0   ? draw.y1
                                  : i == 1 ? draw.y2
                                           : draw.y_refs[i - 2];
            st = advance_dtd_with_variance(st, norm_cdf(y_draw), bucket_dvar(i, l),
                                           inputs_.names[i].params, dt);
        }
    };

    for (std::size_t l = 1; l <= n_buckets; ++l) {
        if (!ws.states[0].alive || !ws.states[1].alive) {
            break;
        }
        // A settlement enters exposure only in the bucket the default
        // happened; clear stale flags before this bucket's worlds are built.
        for (auto& st : ws.states) {
            if (!st.alive) {
                st.defaulted_this_bucket = false;
            }
        }
        const std::size_t b = l - 1;
        const double t0 = config_.grid[l - 1];
        const double t1 = config_.grid[l];
        const double dt = t1 - t0;
        const std::uint32_t bucket_key = static_cast<std::uint32_t>(l);

        const double q1 =
            inputs_.names[0].params.lambda(t0) * ws.states[0].y / std::sqrt(bucket_dvar(0, l));
        const double q2 =
            inputs_.names[1].params.lambda(t0) * ws.states[1].y / std::sqrt(bucket_dvar(1, l));
        const double p_s1 = clamp_probability(1.0 - 2.0 * norm_cdf(-q1));
        const double p_s2 = clamp_probability(1.0 - 2.0 * norm_cdf(-q2));

        if (mode == SimulationMode::Conditional) {
            const auto [p12_i, p12_ii] = joint_bucket_weights(p_s1, p_s2, q1, q2, l21);
            out.p12_i[b] = p12_i;
            out.p12_ii[b] = p12_ii;

            // Case I world: counterparty defaults in the bucket, investor
            // survives; reference names reuse K1 = eps1, K2 = eps2.
            if (p12_i > kWeightFloor) {
                RandomStream su(config_.seed, scen, bucket_key, kSubCaseOneU);
                const auto [e1, e2] =
                    sample_case_I(inputs_.structure, p_s1, p_s2, q1, q2, su);
                ws.k[0] = e1;
                ws.k[1] = e2;
                RandomStream sk(config_.seed, scen, bucket_key, kSubCaseOneK);
                for (std::size_t j = 2; j < s + 2; ++j) {
                    ws.k[j] = sk.next_normal();
                }
                RandomStream se(config_.seed, scen, bucket_key, kSubCaseOneEps);
                for (auto& e : ws.eps) {
                    e = se.next_normal();
                }
                const JointDraw draw = assemble_draw(inputs_.structure, ws.k, ws.eps);
                ws.world = ws.states;
                advance_world(ws.world, draw, l, dt);
                const auto exposure = portfolio_exposure(inputs_.portfolio, t1, ws.world,
                                                         ctx_, inputs_.parties.netting);
                out.cva[b] += (1.0 - inputs_.parties.recovery_cpty) * p12_i * exposure.first *
                              df_edges_[l];
            }

            // Case II world: investor defaults, counterparty survives.
            if (p12_ii > kWeightFloor) {
                RandomStream su(config_.seed, scen, bucket_key, kSubCaseTwoU);
                const auto [e1, e2] =
                    sample_case_II(inputs_.structure, p_s1, p_s2, q1, q2, su);
                ws.k[0] = e1;
                ws.k[1] = e2;
                RandomStream sk(config_.seed, scen, bucket_key, kSubCaseTwoK);
                for (std::size_t j = 2; j < s + 2; ++j) {
                    ws.k[j] = sk.next_normal();
                }
                RandomStream se(config_.seed, scen, bucket_key, kSubCaseTwoEps);
                for (auto& e : ws.eps) {
                    e = se.next_normal();
                }
                const JointDraw draw = assemble_draw(inputs_.structure, ws.k, ws.eps);
                ws.world = ws.states;
                advance_world(ws.world, draw, l, dt);
                const auto exposure = portfolio_exposure(inputs_.portfolio, t1, ws.world,
                                                         ctx_, inputs_.parties.netting);
                out.cva[b] -= (1.0 - inputs_.parties.recovery_inv) * p12_ii * exposure.second *
                              df_edges_[l];
            }
        }

        // Main-path advance: fresh joint draw, default checks for every
        // alive name, transition root-solve for survivors.
        {
            RandomStream sk(config_.seed, scen, bucket_key, kSubMainK);
            for (auto& v : ws.k) {
                v = sk.next_normal();
            }
            RandomStream se(config_.seed, scen, bucket_key, kSubMainEps);
            for (auto& e : ws.eps) {
                e = se.next_normal();
            }
            const JointDraw draw = assemble_draw(inputs_.structure, ws.k, ws.eps);
            advance_world(ws.states, draw, l, dt);

            out.default_cpty[b] = ws.states[0].defaulted_this_bucket ? 1 : 0;
            out.default_inv[b] = ws.states[1].defaulted_this_bucket ? 1 : 0;

            if (mode == SimulationMode::Unconditional) {
                const bool cpty_def = ws.states[0].defaulted_this_bucket;
                const bool inv_def = ws.states[1].defaulted_this_bucket;
                if (cpty_def && !inv_def) {
                    const auto exposure = portfolio_exposure(inputs_.portfolio, t1, ws.states,
                                                             ctx_, inputs_.parties.netting);
                    out.cva[b] += (1.0 - inputs_.parties.recovery_cpty) * exposure.first *
                                  df_edges_[l];
                    out.p12_i[b] = 1.0;
                } else if (inv_def && !cpty_def) {
                    const auto exposure = portfolio_exposure(inputs_.portfolio, t1, ws.states,
                                                             ctx_, inputs_.parties.netting);
                    out.cva[b] -= (1.0 - inputs_.parties.recovery_inv) * exposure.second *
                                  df_edges_[l];
                    out.p12_ii[b] = 1.0;
                }
            }

            if (config_.trigger && ws.states[0].alive && ws.states[1].alive) {
                // Rating migration reuses the same bucket uniforms as the
                // default check.
                const double u1m = norm_cdf(draw.y1);
                const double u2m = norm_cdf(draw.y2);
                const double mtm =
                    portfolio_value(inputs_.portfolio, t1, ws.states, ctx_);
                if (rating_trigger_step(u1m, u2m, trigger_pm_[0][b], trigger_pm_[1][b], mtm) ==
                    TriggerDecision::Stop) {
                    out.trigger_stop = true;
                    break;
                }
            }
        }
    }
}

ScenarioResult CvaEngine::run_scenario_conditional(long scenario_index) const {
    ScenarioResult out;
    Workspace ws;
    simulate(scenario_index, SimulationMode::Conditional, out, ws);
    return out;
}

ScenarioResult CvaEngine::run_scenario_unconditional(long scenario_index) const {
    ScenarioResult out;
    Workspace ws;
    simulate(scenario_index, SimulationMode::Unconditional, out, ws);
    return out;
}

CvaReport CvaEngine::run() const {
    const long n = config_.n_scenarios;
    const std::size_t n_buckets = config_.grid.size() - 1;
    const unsigned n_threads = resolve_threads(config_.n_threads);
    constexpr long kBlock = 256;
    const long n_blocks = (n + kBlock - 1) / kBlock;

    struct Partial {
        std::vector<RunningMoments> cva;
        std::vector<double> p12i_sum, p12ii_sum;
        std::vector<long> def_cpty, def_inv;
        RunningMoments total;
        long trigger_stops = 0, aborted = 0;
    };
    std::vector<Partial> partials(static_cast<std::size_t>(n_blocks));
    std::atomic<long> next_block{0};

    auto worker = [&]() {
        ScenarioResult res;
        Workspace ws;
        for (;;) {
            const long blk = next_block.fetch_add(1);
            if (blk >= n_blocks) {
                return;
            }
            Partial& p = partials[static_cast<std::size_t>(blk)];
            p.cva.assign(n_buckets, RunningMoments{});
            p.p12i_sum.assign(n_buckets, 0.0);
            p.p12ii_sum.assign(n_buckets, 0.0);
            p.def_cpty.assign(n_buckets, 0);
            p.def_inv.assign(n_buckets, 0);
            const long begin = blk * kBlock;
            const long end = std::min(n, begin + kBlock);
            for (long i = begin; i < end; ++i) {
                try {
                    simulate(i, config_.mode, res, ws);
                } catch (const std::exception&) {
                    ++p.aborted;
                    continue;
                }
                double total = 0.0;
                for (std::size_t b = 0; b < n_buckets; ++b) {
                    const double c = res.cva[b];
                    total += c;
                    p.cva[b].add(c);
                    p.p12i_sum[b] += res.p12_i[b];
                    p.p12ii_sum[b] += res.p12_ii[b];
                    p.def_cpty[b] += res.default_cpty[b];
                    p.def_inv[b] += res.default_inv[b];
                }
                p.total.add(total);
                if (res.trigger_stop) {
                    ++p.trigger_stops;
                }
            }
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    // Ordered reduction: identical result for any thread count.
    CvaReport report;
    report.n_scenarios = n;
    report.mode = config_.mode;
    report.seed = config_.seed;
    report.buckets.resize(n_buckets);
    std::vector<RunningMoments> cva(n_buckets);
    std::vector<double> p12i_sum(n_buckets, 0.0), p12ii_sum(n_buckets, 0.0);
    RunningMoments total;
    for (const auto& p : partials) {
        for (std::size_t b = 0; b < n_buckets; ++b) {
            cva[b].merge(p.cva[b]);
            p12i_sum[b] += p.p12i_sum[b];
            p12ii_sum[b] += p.p12ii_sum[b];
            report.buckets[b].defaults_cpty += p.def_cpty[b];
            report.buckets[b].defaults_inv += p.def_inv[b];
        }
        total.merge(p.total);
        report.trigger_stops += p.trigger_stops;
        report.aborted += p.aborted;
    }
    if (report.aborted * 1000 > n) {
        std::ostringstream msg;
        msg << "engine run: " << report.aborted << " of " << n << " scenarios aborted";
        throw std::runtime_error(msg.str());
    }
    const auto dn = static_cast<double>(n);
    for (std::size_t b = 0; b < n_buckets; ++b) {
        auto& bs = report.buckets[b];
        bs.t = config_.grid[b + 1];
        bs.cva_mean = cva[b].mean * (static_cast<double>(cva[b].n) / dn);
        bs.cva_se = cva[b].se();
        bs.p12_i_mean = p12i_sum[b] / dn;
        bs.p12_ii_mean = p12ii_sum[b] / dn;
        report.defaults_cpty_total += bs.defaults_cpty;
        report.defaults_inv_total += bs.defaults_inv;
    }
    report.total = total.mean * (static_cast<double>(total.n) / dn);
    report.total_se = total.se();
    return report;
}

DefaultCorrResult default_correlation(double p1, double p2, double rho_asset, double horizon,
                                      DefaultCorrMode mode, long n_scenarios,
                                      std::uint64_t seed) {
    if (!(p1 > 0.0) || !(p1 < 1.0) || !(p2 > 0.0) || !(p2 < 1.0)) {
        throw std::domain_error("default_correlation: marginal PDs outside (0,1)");
    }
    if (!(std::fabs(rho_asset) <= 1.0)) {
        throw std::domain_error("default_correlation: |rho| > 1");
    }
    const double denom = std::sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2));

    if (mode == DefaultCorrMode::Analytic) {
        const double joint = bivar_norm_cdf(norm_inv(p1), norm_inv(p2), rho_asset);
        return {(joint - p1 * p2) / denom, 0.0};
    }

    if (n_scenarios < 2) {
        throw std::domain_error("default_correlation: simulated mode needs n >= 2");
    }
    // Engine default check over one bucket spanning the horizon:
    // u_i = N(y_i) >= p_S  <=>  y_i >= -N^{-1}(p_i).
    // The marginals are inputs, so only the joint probability is estimated;
    // the correlation is then linear in the joint count, unbiased, with an
    // exact binomial standard error.
    const double b1 = -norm_inv(p1);
    const double b2 = -norm_inv(p2);
    const double w = std::sqrt(1.0 - rho_asset * rho_asset);
    const auto hkey = static_cast<std::uint32_t>(std::lround(horizon * 1000.0));
    long n12 = 0;
    for (long i = 0; i < n_scenarios; ++i) {
        RandomStream rs(seed, static_cast<std::uint32_t>(i), hkey, kSubPath);
        const double k1 = rs.next_normal();
        const double k2 = rs.next_normal();
        const double y1 = k1;
        const double y2 = rho_asset * k1 + w * k2;
        n12 += (y1 >= b1) && (y2 >= b2);
    }
    const auto dn = static_cast<double>(n_scenarios);
    const double h12 = n12 / dn;
    const double value = (h12 - p1 * p2) / denom;
    // Laplace-smoothed binomial variance: keeps the standard error honest
    // when only a handful of joint defaults land.
    const double h12_s = (n12 + 1.0) / (dn + 2.0);
    return {value, std::sqrt(h12_s * (1.0 - h12_s) / dn) / denom};
}

std::vector<MartingaleCheckpoint> martingale_test(const MarketPdCurve& curve,
                                                  const DtdParams& params,
                                                  const std::vector<double>& grid, double T,
                                                  const std::vector<double>& checkpoints,
                                                  long n_paths, std::uint64_t seed,
                                                  unsigned n_threads) {
    if (grid.size() < 2 || grid.front() != 0.0) {
        throw std::invalid_argument("martingale_test: grid must start at 0");
    }
    if (!(T >= grid.back())) {
        throw std::invalid_argument("martingale_test: T must be at or beyond the grid end");
    }
    std::vector<std::size_t> cp_index;
    for (double cp : checkpoints) {
        bool found = false;
        for (std::size_t l = 1; l < grid.size(); ++l) {
            if (std::fabs(grid[l] - cp) < 1e-9) {
                cp_index.push_back(l);
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::invalid_argument("martingale_test: checkpoint not on the grid");
        }
    }

    const std::size_t n_edges = grid.size();
    std::vector<double> tbar(n_edges);
    for (std::size_t l = 0; l < n_edges; ++l) {
        tbar[l] = effective_time(curve, params.y0, grid[l]);
    }
    const double tbar_T = effective_time(curve, params.y0, T);

    const std::size_t n_cp = checkpoints.size();
    struct Partial {
        std::vector<double> sum, sumsq;
    };
    constexpr long kBlock = 1024;
    const long n_blocks = (n_paths + kBlock - 1) / kBlock;
    std::vector<Partial> partials(static_cast<std::size_t>(n_blocks));
    std::atomic<long> next_block{0};

    auto worker = [&]() {
        std::vector<double> values(n_cp);
        for (;;) {
            const long blk = next_block.fetch_add(1);
            if (blk >= n_blocks) {
                return;
            }
            Partial& p = partials[static_cast<std::size_t>(blk)];
            p.sum.assign(n_cp, 0.0);
            p.sumsq.assign(n_cp, 0.0);
            const long begin = blk * kBlock;
            const long end = std::min(n_paths, begin + kBlock);
            for (long i = begin; i < end; ++i) {
                std::fill(values.begin(), values.end(), 0.0);
                DtdState st{0, params.y0, 0.0, true, false};
                for (std::size_t l = 1; l < n_edges && st.alive; ++l) {
                    RandomStream rs(seed, static_cast<std::uint32_t>(i),
                                    static_cast<std::uint32_t>(l), kSubPath);
                    const double u = rs.next_uniform();
                    st = advance_dtd_with_variance(st, u, tbar[l] - tbar[l - 1], params,
                                                   grid[l] - grid[l - 1]);
                    if (st.alive) {
                        for (std::size_t c = 0; c < n_cp; ++c) {
                            if (cp_index[c] == l) {
                                const double dv = tbar_T - tbar[l];
                                const double q =
                                    params.lambda(st.t) * st.y / std::sqrt(dv);
                                values[c] = 1.0 - 2.0 * norm_cdf(-q);
                            }
                        }
                    }
                }
                for (std::size_t c = 0; c < n_cp; ++c) {
                    p.sum[c] += values[c];
                    p.sumsq[c] += values[c] * values[c];
                }
            }
        }
    };

    const unsigned threads = resolve_threads(n_threads);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    std::vector<double> sum(n_cp, 0.0), sumsq(n_cp, 0.0);
    for (const auto& p : partials) {
        for (std::size_t c = 0; c < n_cp; ++c) {
            sum[c] += p.sum[c];
            sumsq[c] += p.sumsq[c];
        }
    }
    const double reference = 1.0 - default_prob(params.y0, tbar_T, params.theta_bar);
    std::vector<MartingaleCheckpoint> out(n_cp);
    for (std::size_t c = 0; c < n_cp; ++c) {
        out[c].t = checkpoints[c];
        out[c].mean = sum[c] / static_cast<double>(n_paths);
        out[c].se = sample_se(sum[c], sumsq[c], n_paths);
        out[c].reference = reference;
    }
    return out;
}

} // namespace dtdcva
