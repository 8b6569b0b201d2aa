#include "dtdcva/cli.hpp"

#include "dtdcva/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace dtdcva::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

fs::path resolve_out_dir(const io::RunManifest& manifest, const Overrides& overrides) {
    std::string dir = manifest.get_or("out_dir", "out");
    if (overrides.out_dir) {
        dir = *overrides.out_dir;
    }
    fs::path p = dir;
    if (p.is_relative()) {
        p = manifest.base_dir / p;
    }
    fs::create_directories(p);
    return p;
}

std::ofstream open_output(const fs::path& file, std::uint64_t seed, std::uint64_t input_hash) {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write output file: " + file.string());
    }
    out << "# seed = " << seed << "\n";
    out << "# input_hash = 0x" << std::hex << input_hash << std::dec << "\n";
    out << std::setprecision(15);
    return out;
}

std::uint64_t manifest_seed(const io::RunManifest& manifest, const Overrides& overrides) {
    if (overrides.seed) {
        return *overrides.seed;
    }
    return static_cast<std::uint64_t>(std::stoll(manifest.get_or("seed", "1")));
}

} // namespace

int cmd_calibrate(const io::RunManifest& manifest, const Overrides& overrides) {
    // Validate every referenced file before any computation.
    const auto disc_path = manifest.path("discount_file");
    const auto corr_path = manifest.path("correlation_file");
    const DiscountCurve disc = io::load_discount_curve(disc_path);
    const auto corr = io::load_correlation(corr_path);

    std::uint64_t hash = kFnvOffset;
    hash = io::fnv1a_file(disc_path, hash);
    hash = io::fnv1a_file(corr_path, hash);

    struct NameInput {
        std::string id;
        CdsQuoteSet quotes;
        SpreadVolQuote vol;
    };
    std::vector<NameInput> inputs;
    for (const auto& id : corr.name_ids) {
        const auto quotes_path = manifest.path("quotes_file." + id);
        const auto vol_path = manifest.path("vol_file." + id);
        NameInput in;
        in.id = id;
        in.quotes = io::load_cds_quotes(quotes_path);
        in.vol = io::load_spread_vol(vol_path);
        hash = io::fnv1a_file(quotes_path, hash);
        hash = io::fnv1a_file(vol_path, hash);
        inputs.push_back(std::move(in));
    }

    const std::uint64_t seed = manifest_seed(manifest, overrides);
    const fs::path out_dir = resolve_out_dir(manifest, overrides);
    auto summary = open_output(out_dir / "calibration.csv", seed, hash);
    summary << "name,y0,vol_tenor,sigma_m\n";
    auto curves = open_output(out_dir / "calibration_curves.csv", seed, hash);
    curves << "name,t,pd_market,t_bar,sigma_i\n";

    std::vector<std::string> failures;
    for (const auto& in : inputs) {
        try {
            const MarketPdCurve curve = bootstrap_pd_curve(in.quotes, disc);
            const double y0 = calibrate_y0(curve, in.vol);
            summary << in.id << ',' << y0 << ',' << in.vol.tenor << ',' << in.vol.sigma_m
                    << '\n';
            const double horizon = in.quotes.tenors.back();
            for (double t = 0.25; t <= horizon + 1e-9; t += 0.25) {
                curves << in.id << ',' << t << ',' << curve.default_prob(t) << ','
                       << effective_time(curve, y0, t) << ',' << spread_vol(curve, y0, t)
                       << '\n';
            }
            std::cout << "calibrated " << in.id << ": y0 = " << y0 << "\n";
        } catch (const std::exception& e) {
            failures.push_back(in.id + std::string(": ") + e.what());
        }
    }
    if (!failures.empty()) {
        for (const auto& f : failures) {
            std::cerr << "calibration failed for " << f << "\n";
        }
        return 2;
    }
    std::cout << "wrote " << (out_dir / "calibration.csv").string() << " and "
              << (out_dir / "calibration_curves.csv").string() << "\n";
    return 0;
}

int cmd_cva(const io::RunManifest& manifest, const Overrides& overrides) {
    io::EngineBundle bundle = io::load_engine(manifest);
    if (overrides.scenarios) {
        bundle.config.n_scenarios = *overrides.scenarios;
    }
    if (overrides.seed) {
        bundle.config.seed = *overrides.seed;
    }
    if (overrides.threads) {
        bundle.config.n_threads = *overrides.threads;
    }
    if (overrides.netting) {
        bundle.config.netting = *overrides.netting;
        bundle.inputs.parties.netting = *overrides.netting;
    }
    if (overrides.mode) {
        if (*overrides.mode == "conditional") {
            bundle.config.mode = SimulationMode::Conditional;
        } else if (*overrides.mode == "unconditional") {
            bundle.config.mode = SimulationMode::Unconditional;
        } else {
            throw ValidationError("mode must be conditional or unconditional");
        }
    }

    for (const auto& w : bundle.warnings) {
        std::cerr << "warning: " << w << "\n";
    }

    const CvaEngine engine(bundle.config, bundle.inputs);
    const CvaReport report = engine.run();

    const fs::path out_dir = resolve_out_dir(manifest, overrides);
    const char* mode_name =
        report.mode == SimulationMode::Conditional ? "conditional" : "unconditional";

    auto profile = open_output(out_dir / "cva_profile.csv", report.seed, bundle.input_hash);
    profile << "# mode = " << mode_name << "\n";
    profile << "# netting = " << (bundle.config.netting ? "on" : "off") << "\n";
    profile << "# scenarios = " << report.n_scenarios << "\n";
    profile << "# total_cva = " << report.total << "\n";
    profile << "# total_se = " << report.total_se << "\n";
    profile << "t,cva_mean,cva_se,p12_I_mean,p12_II_mean,defaults_cpty,defaults_inv\n";
    for (const auto& b : report.buckets) {
        profile << b.t << ',' << b.cva_mean << ',' << b.cva_se << ',' << b.p12_i_mean << ','
                << b.p12_ii_mean << ',' << b.defaults_cpty << ',' << b.defaults_inv << '\n';
    }

    auto summary = open_output(out_dir / "cva_summary.txt", report.seed, bundle.input_hash);
    summary << "mode            " << mode_name << "\n";
    summary << "netting         " << (bundle.config.netting ? "on" : "off") << "\n";
    summary << "scenarios       " << report.n_scenarios << "\n";
    summary << "buckets         " << report.buckets.size() << "\n";
    summary << "kappa           " << bundle.config.kappa << "\n";
    summary << "total CVA       " << report.total << "\n";
    summary << "standard error  " << report.total_se << "\n";
    summary << "cpty defaults   " << report.defaults_cpty_total << "\n";
    summary << "inv defaults    " << report.defaults_inv_total << "\n";
    summary << "trigger stops   " << report.trigger_stops << "\n";
    summary << "aborted         " << report.aborted << "\n";

    std::cout << "total CVA = " << report.total << " (se " << report.total_se << ", "
              << report.n_scenarios << " scenarios, " << mode_name << ")\n";
    std::cout << "wrote " << (out_dir / "cva_profile.csv").string() << "\n";
    return 0;
}

int cmd_default_corr(const io::RunManifest& manifest, const Overrides& overrides) {
    io::DefaultCorrBundle bundle = io::load_default_corr(manifest);
    if (overrides.scenarios) {
        bundle.n_scenarios = *overrides.scenarios;
    }
    if (overrides.seed) {
        bundle.seed = *overrides.seed;
    }

    const fs::path out_dir = resolve_out_dir(manifest, overrides);
    auto out = open_output(out_dir / "default_correlation.csv", bundle.seed,
                           bundle.input_hash);
    out << "label,horizon_years,asset_corr,pd1,pd2,analytic,simulated,sim_se\n";

    std::vector<std::string> failures;
    for (std::size_t r = 0; r < bundle.rows.size(); ++r) {
        const auto& row = bundle.rows[r];
        const std::uint64_t row_seed = bundle.seed + 1000003ull * r;
        for (double h : bundle.horizons) {
            try {
                // Marginals extend to the horizon by flat hazard.
                const double p1 = 1.0 - std::pow(1.0 - row.pd1, h);
                const double p2 = 1.0 - std::pow(1.0 - row.pd2, h);
                const auto analytic = default_correlation(p1, p2, row.asset_corr, h,
                                                          DefaultCorrMode::Analytic);
                const auto simulated =
                    default_correlation(p1, p2, row.asset_corr, h, DefaultCorrMode::Simulated,
                                        bundle.n_scenarios, row_seed);
                out << row.label << ',' << h << ',' << row.asset_corr << ',' << p1 << ','
                    << p2 << ',' << analytic.value << ',' << simulated.value << ','
                    << simulated.se << '\n';
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << row.label << " at horizon " << h << ": " << e.what();
                failures.push_back(msg.str());
            }
        }
    }
    if (!failures.empty()) {
        for (const auto& f : failures) {
            std::cerr << "default-corr failed for " << f << "\n";
        }
        return 2;
    }
    std::cout << "wrote " << (out_dir / "default_correlation.csv").string() << "\n";
    return 0;
}

} // namespace dtdcva::cli
