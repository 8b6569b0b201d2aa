#include "dtdcva/io.hpp"

#include "dtdcva/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dtdcva::io {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',' || c == '\t' || c == ' ') {
            if (!field.empty()) {
                out.push_back(field);
                field.clear();
            }
        } else {
            field.push_back(c);
        }
    }
    if (!field.empty()) {
        out.push_back(field);
    }
    return out;
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ValidationError("cannot open file: " + file.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        rows.push_back(split_fields(t));
    }
    if (rows.empty()) {
        throw ValidationError("empty file: " + file.string());
    }
    return rows;
}

double parse_double(const std::string& s, const std::filesystem::path& file) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError("cannot parse number '" + s + "' in " + file.string());
    }
}

void expect_header(const std::vector<std::string>& row,
                   const std::vector<std::string>& expected,
                   const std::filesystem::path& file) {
    if (row.size() != expected.size()) {
        throw ValidationError("bad header in " + file.string());
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (lower(row[i]) != expected[i]) {
            throw ValidationError("expected header column '" + expected[i] + "', got '" +
                                  row[i] + "' in " + file.string());
        }
    }
}

} // namespace

std::string RunManifest::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        throw ValidationError("manifest: missing key '" + key + "'");
    }
    return it->second;
}

std::string RunManifest::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

std::filesystem::path RunManifest::path(const std::string& key) const {
    std::filesystem::path p = get(key);
    if (p.is_relative()) {
        p = base_dir / p;
    }
    return p;
}

RunManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ValidationError("cannot open manifest: " + file.string());
    }
    RunManifest manifest;
    manifest.base_dir = file.has_parent_path() ? file.parent_path() : ".";
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "manifest " << file.string() << ": line " << line_no
                << " is not 'key = value'";
            throw ValidationError(msg.str());
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError("manifest: empty key at line " + std::to_string(line_no));
        }
        manifest.values[key] = value;
    }
    return manifest;
}

CdsQuoteSet load_cds_quotes(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    expect_header(rows[0], {"tenor_years", "par_spread_bps", "recovery"}, file);
    CdsQuoteSet quotes;
    bool have_recovery = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3) {
            throw ValidationError("cds quotes: bad row in " + file.string());
        }
        quotes.tenors.push_back(parse_double(rows[i][0], file));
        quotes.spreads.push_back(parse_double(rows[i][1], file) * 1e-4);
        const double r = parse_double(rows[i][2], file);
        if (have_recovery && std::fabs(r - quotes.recovery) > 1e-12) {
            throw ValidationError("cds quotes: inconsistent recovery values in " +
                                  file.string());
        }
        quotes.recovery = r;
        have_recovery = true;
    }
    quotes.validate();
    return quotes;
}

DiscountCurve load_discount_curve(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    expect_header(rows[0], {"time_years", "discount_factor"}, file);
    std::vector<std::pair<double, double>> pillars;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2) {
            throw ValidationError("discount curve: bad row in " + file.string());
        }
        pillars.emplace_back(parse_double(rows[i][0], file), parse_double(rows[i][1], file));
    }
    return DiscountCurve::from_pillars(std::move(pillars));
}

SpreadVolQuote load_spread_vol(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    expect_header(rows[0], {"tenor_years", "sigma_m"}, file);
    if (rows.size() != 2 || rows[1].size() != 2) {
        throw ValidationError("spread vol: expected exactly one quote row in " + file.string());
    }
    SpreadVolQuote vol;
    vol.tenor = parse_double(rows[1][0], file);
    vol.sigma_m = parse_double(rows[1][1], file);
    if (!(vol.tenor > 0.0) || !(vol.sigma_m > 0.0)) {
        throw ValidationError("spread vol: tenor and sigma_m must be positive in " +
                              file.string());
    }
    return vol;
}

CorrelationInput load_correlation(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    if (rows[0].size() != 2 || lower(rows[0][0]) != "indices") {
        throw ValidationError("correlation file must start with 'indices <s>': " +
                              file.string());
    }
    CorrelationInput input;
    const double s_raw = parse_double(rows[0][1], file);
    if (s_raw < 1 || s_raw != std::floor(s_raw)) {
        throw ValidationError("correlation file: invalid index count in " + file.string());
    }
    input.n_indices = static_cast<std::size_t>(s_raw);
    const std::size_t s = input.n_indices;
    if (rows.size() < 1 + s + 2) {
        throw ValidationError("correlation file: too few rows in " + file.string());
    }
    input.sigma_m.resize(s * s);
    for (std::size_t i = 0; i < s; ++i) {
        const auto& row = rows[1 + i];
        if (row.size() != s) {
            throw ValidationError("correlation file: Sigma_M row length mismatch in " +
                                  file.string());
        }
        for (std::size_t j = 0; j < s; ++j) {
            input.sigma_m[i * s + j] = parse_double(row[j], file);
        }
    }
    for (std::size_t r = 1 + s; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2 + s || lower(row[0]) != "name") {
            throw ValidationError("correlation file: expected 'name <id> a_1 .. a_s' rows in " +
                                  file.string());
        }
        const std::string id = row[1];
        if (std::find(input.name_ids.begin(), input.name_ids.end(), id) !=
            input.name_ids.end()) {
            throw ValidationError("correlation file: duplicate name '" + id + "'");
        }
        input.name_ids.push_back(id);
        std::vector<double> a(s);
        for (std::size_t j = 0; j < s; ++j) {
            a[j] = parse_double(row[2 + j], file);
        }
        input.loadings.a.push_back(std::move(a));
    }
    if (input.name_ids.size() < 2) {
        throw ValidationError("correlation file: need counterparty and investor rows in " +
                              file.string());
    }
    return input;
}

std::vector<Instrument> load_portfolio(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    expect_header(rows[0],
                  {"deal_id", "kind", "reference_name", "notional", "maturity_years",
                   "contract_spread_bps", "recovery", "direction"},
                  file);
    std::vector<Instrument> deals;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 8) {
            throw ValidationError("portfolio: bad row in " + file.string());
        }
        Instrument inst;
        inst.deal_id = row[0];
        const std::string kind = lower(row[1]);
        if (kind == "cds") {
            inst.kind = InstrumentKind::Cds;
        } else if (kind == "risky_zero_bond") {
            inst.kind = InstrumentKind::RiskyZeroBond;
        } else {
            throw ValidationError("portfolio: unknown kind '" + row[1] + "' for deal " +
                                  inst.deal_id);
        }
        inst.reference_name = row[2];
        inst.notional = parse_double(row[3], file);
        inst.maturity = parse_double(row[4], file);
        inst.contract_spread = parse_double(row[5], file) * 1e-4;
        inst.recovery = parse_double(row[6], file);
        const std::string dir = lower(row[7]);
        if (dir == "long" || dir == "1" || dir == "+1") {
            inst.direction = 1;
        } else if (dir == "short" || dir == "-1") {
            inst.direction = -1;
        } else {
            throw ValidationError("portfolio: unknown direction '" + row[7] + "' for deal " +
                                  inst.deal_id);
        }
        inst.validate();
        deals.push_back(std::move(inst));
    }
    return deals;
}

TransitionMatrix load_transition_matrix(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    if (rows[0].size() < 2 || lower(rows[0][0]) != "rating") {
        throw ValidationError("transition matrix: header must be 'rating,<labels...>' in " +
                              file.string());
    }
    TransitionMatrix tm;
    tm.labels.assign(rows[0].begin() + 1, rows[0].end());
    const std::size_t m = tm.labels.size();
    if (rows.size() != 1 + m) {
        throw ValidationError("transition matrix: expected " + std::to_string(m) +
                              " rows in " + file.string());
    }
    tm.probs.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& row = rows[1 + i];
        if (row.size() != 1 + m || row[0] != tm.labels[i]) {
            throw ValidationError("transition matrix: row labels must match header order in " +
                                  file.string());
        }
        for (std::size_t j = 0; j < m; ++j) {
            tm.probs[i * m + j] = parse_double(row[1 + j], file);
        }
    }
    tm.validate();
    return tm;
}

std::vector<DefaultCorrRow> load_default_corr_rows(const std::filesystem::path& file) {
    const auto rows = read_table(file);
    expect_header(rows[0], {"label", "asset_corr", "pd1", "pd2"}, file);
    std::vector<DefaultCorrRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 4) {
            throw ValidationError("default corr file: bad row in " + file.string());
        }
        DefaultCorrRow r;
        r.label = row[0];
        r.asset_corr = parse_double(row[1], file);
        r.pd1 = parse_double(row[2], file);
        r.pd2 = parse_double(row[3], file);
        out.push_back(std::move(r));
    }
    return out;
}

std::uint64_t fnv1a_file(const std::filesystem::path& file, std::uint64_t hash) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open file for hashing: " + file.string());
    }
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) {
            break;
        }
    }
    return hash;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

long parse_long(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError("manifest: cannot parse integer '" + s + "' for key " + key);
    }
}

double parse_double_key(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError("manifest: cannot parse number '" + s + "' for key " + key);
    }
}

bool parse_on_off(const std::string& s, const std::string& key) {
    const std::string v = lower(s);
    if (v == "on" || v == "true" || v == "1") {
        return true;
    }
    if (v == "off" || v == "false" || v == "0") {
        return false;
    }
    throw ValidationError("manifest: expected on/off for key " + key + ", got '" + s + "'");
}

} // namespace

MarketBundle load_market(const RunManifest& manifest) {
    MarketBundle bundle;
    std::uint64_t hash = kFnvOffset;

    bundle.disc = load_discount_curve(manifest.path("discount_file"));
    hash = fnv1a_file(manifest.path("discount_file"), hash);

    const auto corr = load_correlation(manifest.path("correlation_file"));
    hash = fnv1a_file(manifest.path("correlation_file"), hash);
    bundle.name_ids = corr.name_ids;

    for (const auto& id : bundle.name_ids) {
        const auto quotes_path = manifest.path("quotes_file." + id);
        const auto vol_path = manifest.path("vol_file." + id);
        const CdsQuoteSet quotes = load_cds_quotes(quotes_path);
        const SpreadVolQuote vol = load_spread_vol(vol_path);
        hash = fnv1a_file(quotes_path, hash);
        hash = fnv1a_file(vol_path, hash);

        NameSetup setup;
        setup.id = id;
        setup.curve = bootstrap_pd_curve(quotes, bundle.disc);
        setup.params.y0 = calibrate_y0(setup.curve, vol);
        bundle.names.push_back(std::move(setup));
        bundle.vols.push_back(vol);
    }
    bundle.input_hash = hash;
    return bundle;
}

EngineBundle load_engine(const RunManifest& manifest) {
    EngineBundle bundle;
    MarketBundle market = load_market(manifest);
    bundle.name_ids = market.name_ids;
    bundle.input_hash = market.input_hash;

    const auto corr = load_correlation(manifest.path("correlation_file"));
    bundle.inputs.structure = build_structure(corr.sigma_m, corr.n_indices, corr.loadings);
    bundle.warnings = bundle.inputs.structure.warnings;

    bundle.inputs.disc = std::move(market.disc);
    bundle.inputs.names = std::move(market.names);

    bundle.inputs.portfolio = load_portfolio(manifest.path("portfolio_file"));
    bundle.input_hash = fnv1a_file(manifest.path("portfolio_file"), bundle.input_hash);
    double max_maturity = 0.0;
    for (auto& deal : bundle.inputs.portfolio) {
        const auto it =
            std::find(bundle.name_ids.begin(), bundle.name_ids.end(), deal.reference_name);
        if (it == bundle.name_ids.end()) {
            throw ValidationError("portfolio: deal " + deal.deal_id +
                                  " references unknown name '" + deal.reference_name + "'");
        }
        deal.name_index = static_cast<int>(it - bundle.name_ids.begin());
        max_maturity = std::max(max_maturity, deal.maturity);
    }

    bundle.inputs.parties.recovery_cpty =
        parse_double_key(manifest.get_or("recovery_cpty", "0.4"), "recovery_cpty");
    bundle.inputs.parties.recovery_inv =
        parse_double_key(manifest.get_or("recovery_inv", "0.4"), "recovery_inv");
    bundle.inputs.parties.netting = parse_on_off(manifest.get_or("netting", "on"), "netting");
    bundle.inputs.parties.validate();

    CvaRunConfig config;
    config.n_scenarios = parse_long(manifest.get_or("scenarios", "10000"), "scenarios");
    config.seed =
        static_cast<std::uint64_t>(parse_long(manifest.get_or("seed", "1"), "seed"));
    config.kappa = parse_double_key(manifest.get_or("kappa", "0"), "kappa");
    config.n_threads = static_cast<unsigned>(parse_long(manifest.get_or("threads", "0"),
                                                        "threads"));
    config.netting = bundle.inputs.parties.netting;
    const std::string mode = lower(manifest.get_or("mode", "conditional"));
    if (mode == "conditional") {
        config.mode = SimulationMode::Conditional;
    } else if (mode == "unconditional") {
        config.mode = SimulationMode::Unconditional;
    } else {
        throw ValidationError("manifest: mode must be conditional or unconditional, got '" +
                              mode + "'");
    }

    const double bucket = parse_double_key(manifest.get_or("bucket_years", "0.25"),
                                           "bucket_years");
    if (!(bucket > 0.0)) {
        throw ValidationError("manifest: bucket_years must be positive");
    }
    double horizon = max_maturity;
    if (manifest.has("horizon_years")) {
        horizon = parse_double_key(manifest.get("horizon_years"), "horizon_years");
    }
    if (!(horizon > 0.0)) {
        throw ValidationError("manifest: no deals and no horizon_years given");
    }
    config.grid.push_back(0.0);
    for (double t = bucket; t < horizon - 1e-9; t += bucket) {
        config.grid.push_back(t);
    }
    config.grid.push_back(horizon);

    if (manifest.has("trigger_rating")) {
        TriggerConfig trig;
        trig.matrix = load_transition_matrix(manifest.path("transition_file"));
        bundle.input_hash = fnv1a_file(manifest.path("transition_file"), bundle.input_hash);
        trig.trigger_rating = manifest.get("trigger_rating");
        trig.initial_rating_cpty = manifest.get("initial_rating." + bundle.name_ids[0]);
        trig.initial_rating_inv = manifest.get("initial_rating." + bundle.name_ids[1]);
        bundle.inputs.parties.trigger_rating = trig.trigger_rating;
        config.trigger = std::move(trig);
    }
    config.validate();
    bundle.config = std::move(config);
    return bundle;
}

DefaultCorrBundle load_default_corr(const RunManifest& manifest) {
    DefaultCorrBundle bundle;
    bundle.rows = load_default_corr_rows(manifest.path("default_corr_file"));
    bundle.input_hash = fnv1a_file(manifest.path("default_corr_file"), kFnvOffset);
    bundle.n_scenarios = parse_long(manifest.get_or("dc_scenarios", "1000000"),
                                    "dc_scenarios");
    bundle.seed = static_cast<std::uint64_t>(parse_long(manifest.get_or("seed", "1"), "seed"));
    if (bundle.n_scenarios < 2) {
        throw ValidationError("manifest: dc_scenarios must be >= 2");
    }

    const std::string spec = manifest.get_or("dc_horizons", "1:10");
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const long lo = parse_long(trim(spec.substr(0, colon)), "dc_horizons");
        const long hi = parse_long(trim(spec.substr(colon + 1)), "dc_horizons");
        if (lo < 1 || hi < lo) {
            throw ValidationError("manifest: bad dc_horizons range '" + spec + "'");
        }
        for (long h = lo; h <= hi; ++h) {
            bundle.horizons.push_back(static_cast<double>(h));
        }
    } else {
        for (const auto& tok : split_fields(spec)) {
            bundle.horizons.push_back(parse_double_key(tok, "dc_horizons"));
        }
    }
    if (bundle.horizons.empty()) {
        throw ValidationError("manifest: dc_horizons is empty");
    }
    return bundle;
}

} // namespace dtdcva::io
