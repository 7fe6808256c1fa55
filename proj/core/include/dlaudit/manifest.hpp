#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dlaudit/adequacy.hpp"
#include "dlaudit/pipeline.hpp"

namespace dlaudit {

/// Run description: input paths, audit date, configuration and output dir.
/// Relative paths are resolved against the manifest's directory.
struct RunManifest {
    std::filesystem::path crawls;
    std::filesystem::path traceroutes_source;
    std::filesystem::path traceroutes_destination;
    std::filesystem::path geodb;
    std::filesystem::path rdns;
    std::filesystem::path asmap;
    std::filesystem::path as2org;
    std::filesystem::path resolutions;
    std::filesystem::path easylist;
    std::filesystem::path hosts_list;
    std::filesystem::path manual_trackers;
    std::filesystem::path cookie_rules;
    std::filesystem::path geohints;
    std::filesystem::path regions;
    std::filesystem::path categories;
    std::filesystem::path ledger;
    std::filesystem::path thresholds;
    std::filesystem::path google_extra;
    std::filesystem::path proxy_checks;
    std::filesystem::path output_dir;
    std::optional<Date> audit_date;
    std::set<CountryCode> exclude_source_countries;
    std::size_t top_k = 10;
    std::optional<double> sol_max_speed_km_per_ms;

    /// Throws ConfigError on malformed JSON, unknown keys or missing required entries.
    static RunManifest parse(std::string_view json, const std::filesystem::path& base_dir);
    static RunManifest load(const std::filesystem::path& path);

    /// Every referenced input exists; throws ConfigError naming the first that does not.
    void check_paths() const;
};

/// Directory holding the bundled data files: $DLAUDIT_DATA_DIR, else the
/// install location chosen at build time.
std::filesystem::path default_data_dir();

struct InputDiagnostics {
    std::map<std::string, std::vector<ParseError>> errors;    // per input file
    std::map<std::string, std::vector<ParseError>> warnings;  // per input file
    std::map<std::string, std::size_t> records;               // per input file

    [[nodiscard]] std::size_t error_count() const;
};

struct LoadedRun {
    AuditInputs inputs;
    AuditConfig config;
    AdequacyLedger ledger;
    InputDiagnostics diagnostics;
};

/// Reads and parses every input of the manifest. `audit_date` overrides the
/// manifest's date; one of the two must be present (ConfigError).
LoadedRun load_run(const RunManifest& manifest, std::optional<Date> audit_date, unsigned jobs);

}  // namespace dlaudit
