#pragma once

#include "dtdcva/io.hpp"

#include <optional>
#include <string>

namespace dtdcva::cli {

/// Command-line overrides of manifest values.
struct Overrides {
    std::optional<long> scenarios;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<bool> netting;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
};

/// Exit codes: 0 success, 1 validation failure, 2 computation failure.
int cmd_calibrate(const io::RunManifest& manifest, const Overrides& overrides);
int cmd_cva(const io::RunManifest& manifest, const Overrides& overrides);
int cmd_default_corr(const io::RunManifest& manifest, const Overrides& overrides);

} // namespace dtdcva::cli
