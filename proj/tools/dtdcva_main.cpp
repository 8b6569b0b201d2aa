#include "dtdcva/cli.hpp"
#include "dtdcva/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Distance-to-default credit risk engine: CDS calibration, CVA by "
                 "conditional/unconditional Monte Carlo, and default correlations"};
    app.require_subcommand(1);

    std::string manifest_path;
    dtdcva::cli::Overrides overrides;
    long scenarios = -1;
    long long seed = -1;
    std::string mode;
    std::string netting;
    long threads = -1;
    std::string out_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path, "Run manifest (key = value file)")
            ->required();
        cmd->add_option("--scenarios", scenarios, "Override scenario count");
        cmd->add_option("--seed", seed, "Override random seed");
        cmd->add_option("--mode", mode, "conditional | unconditional");
        cmd->add_option("--netting", netting, "on | off");
        cmd->add_option("--threads", threads, "Worker threads (0 = auto)");
        cmd->add_option("--out", out_dir, "Output directory");
    };

    auto* calibrate = app.add_subcommand("calibrate", "Bootstrap PD curves and calibrate y0");
    auto* cva = app.add_subcommand("cva", "Run the CVA Monte Carlo");
    auto* dcorr = app.add_subcommand("default-corr", "Analytic vs simulated default correlation");
    add_common(calibrate);
    add_common(cva);
    add_common(dcorr);

    CLI11_PARSE(app, argc, argv);

    if (scenarios >= 0) {
        overrides.scenarios = scenarios;
    }
    if (seed >= 0) {
        overrides.seed = static_cast<std::uint64_t>(seed);
    }
    if (!mode.empty()) {
        overrides.mode = mode;
    }
    if (!netting.empty()) {
        if (netting != "on" && netting != "off") {
            std::cerr << "error: --netting must be on or off\n";
            return 1;
        }
        overrides.netting = netting == "on";
    }
    if (threads >= 0) {
        overrides.threads = static_cast<unsigned>(threads);
    }
    if (!out_dir.empty()) {
        overrides.out_dir = out_dir;
    }

    try {
        const auto manifest = dtdcva::io::load_manifest(manifest_path);
        if (calibrate->parsed()) {
            return dtdcva::cli::cmd_calibrate(manifest, overrides);
        }
        if (cva->parsed()) {
            return dtdcva::cli::cmd_cva(manifest, overrides);
        }
        return dtdcva::cli::cmd_default_corr(manifest, overrides);
    } catch (const dtdcva::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
