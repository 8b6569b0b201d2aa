#pragma once

#include "dtdcva/cva_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dtdcva::io {

/// Flat key = value manifest; '#' starts a comment. Relative file paths are
/// resolved against the manifest's directory.
struct RunManifest {
    std::filesystem::path base_dir;
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    std::filesystem::path path(const std::string& key) const;
};

RunManifest load_manifest(const std::filesystem::path& file);

// --- individual file loaders -------------------------------------------

/// Columns: tenor_years, par_spread_bps, recovery (header required; spreads
/// converted from basis points to decimals on load).
CdsQuoteSet load_cds_quotes(const std::filesystem::path& file);

/// Columns: time_years, discount_factor.
DiscountCurve load_discount_curve(const std::filesystem::path& file);

/// Columns: tenor_years, sigma_m (annualized decimal).
SpreadVolQuote load_spread_vol(const std::filesystem::path& file);

struct CorrelationInput {
    std::size_t n_indices = 0;
    std::vector<double> sigma_m;
    std::vector<std::string> name_ids; // first = counterparty, second = investor
    FactorLoadings loadings;
};

/// Block format: "indices <s>" followed by the s x s index correlation
/// matrix, then one "name <id> a_1 ... a_s" row per credit name.
CorrelationInput load_correlation(const std::filesystem::path& file);

/// Columns: deal_id, kind, reference_name, notional, maturity_years,
/// contract_spread_bps, recovery, direction. name_index stays unresolved.
std::vector<Instrument> load_portfolio(const std::filesystem::path& file);

/// Square table with a rating-label header row and leading label column.
TransitionMatrix load_transition_matrix(const std::filesystem::path& file);

struct DefaultCorrRow {
    std::string label;
    double asset_corr = 0.0;
    double pd1 = 0.0; // one-period marginal PDs (extended to horizons by flat hazard)
    double pd2 = 0.0;
};

/// Columns: label, asset_corr, pd1, pd2.
std::vector<DefaultCorrRow> load_default_corr_rows(const std::filesystem::path& file);

// --- assembled inputs ----------------------------------------------------

struct MarketBundle {
    DiscountCurve disc;
    std::vector<std::string> name_ids;
    std::vector<NameSetup> names; // curves bootstrapped, y0 calibrated
    std::vector<SpreadVolQuote> vols;
    std::uint64_t input_hash = 0;
};

struct EngineBundle {
    EngineInputs inputs;
    CvaRunConfig config;
    std::vector<std::string> name_ids;
    std::vector<std::string> warnings;
    std::uint64_t input_hash = 0;
};

struct DefaultCorrBundle {
    std::vector<DefaultCorrRow> rows;
    std::vector<double> horizons;
    long n_scenarios = 1000000;
    std::uint64_t seed = 1;
    std::uint64_t input_hash = 0;
};

/// Loads and calibrates everything cmd_calibrate needs. All referenced
/// files must exist and parse; throws ValidationError otherwise.
MarketBundle load_market(const RunManifest& manifest);

/// Loads the full engine setup for cmd_cva (market + correlation +
/// portfolio + run controls).
EngineBundle load_engine(const RunManifest& manifest);

/// Loads the default-correlation grid for cmd_default_corr.
DefaultCorrBundle load_default_corr(const RunManifest& manifest);

/// FNV-1a hash of a file's bytes, combined into `hash`.
std::uint64_t fnv1a_file(const std::filesystem::path& file, std::uint64_t hash);

} // namespace dtdcva::io
