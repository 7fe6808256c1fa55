#include "dlaudit/manifest.hpp"

#include <cstdlib>

#include <json.hpp>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "text.hpp"

#ifndef DLAUDIT_DEFAULT_DATA_DIR
#define DLAUDIT_DEFAULT_DATA_DIR "data"
#endif

namespace dlaudit {

namespace fs = std::filesystem;

namespace {

struct PathField {
    const char* key;
    fs::path RunManifest::*member;
    bool required;
};

constexpr PathField kPathFields[] = {
    {"crawls", &RunManifest::crawls, true},
    {"traceroutes_source", &RunManifest::traceroutes_source, true},
    {"traceroutes_destination", &RunManifest::traceroutes_destination, true},
    {"geodb", &RunManifest::geodb, true},
    {"rdns", &RunManifest::rdns, true},
    {"asmap", &RunManifest::asmap, true},
    {"as2org", &RunManifest::as2org, true},
    {"resolutions", &RunManifest::resolutions, false},
    {"easylist", &RunManifest::easylist, false},
    {"hosts_list", &RunManifest::hosts_list, false},
    {"manual_trackers", &RunManifest::manual_trackers, false},
    {"cookie_rules", &RunManifest::cookie_rules, false},
    {"geohints", &RunManifest::geohints, false},
    {"regions", &RunManifest::regions, false},
    {"categories", &RunManifest::categories, false},
    {"ledger", &RunManifest::ledger, false},
    {"thresholds", &RunManifest::thresholds, false},
    {"google_extra", &RunManifest::google_extra, false},
    {"proxy_checks", &RunManifest::proxy_checks, false},
    {"output_dir", &RunManifest::output_dir, true},
};

std::string read_input(const fs::path& p) {
    try {
        return text::read_file(p.string());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

fs::path default_data_dir() {
    if (const char* env = std::getenv("DLAUDIT_DATA_DIR"); env && *env) return env;
    return DLAUDIT_DEFAULT_DATA_DIR;
}

RunManifest RunManifest::parse(std::string_view content, const fs::path& base_dir) {
    const auto doc = nlohmann::json::parse(content, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError("manifest: not a JSON object");
    RunManifest m;
    std::set<std::string> known = {"audit_date", "inputs", "output_dir", "exclude_source_countries", "top_k",
                                   "sol_max_speed_km_per_ms"};
    for (const auto& [k, v] : doc.items()) {
        if (!known.contains(k)) throw ConfigError("manifest: unknown key '" + k + "'");
    }
    const auto resolve = [&](const std::string& s) {
        const fs::path p(s);
        return p.is_absolute() ? p : (base_dir / p).lexically_normal();
    };

    const nlohmann::json empty = nlohmann::json::object();
    const auto in_it = doc.find("inputs");
    const auto& inputs = in_it == doc.end() ? empty : *in_it;
    if (!inputs.is_object()) throw ConfigError("manifest: 'inputs' must be an object");
    for (const auto& [k, v] : inputs.items()) {
        const bool ok = std::any_of(std::begin(kPathFields), std::end(kPathFields),
                                    [&](const PathField& f) { return k == f.key && k != "output_dir"; });
        if (!ok) throw ConfigError("manifest: unknown input '" + k + "'");
        if (!v.is_string() || v.get<std::string>().empty()) {
            throw ConfigError("manifest: input '" + k + "' must be a non-empty path");
        }
    }
    for (const auto& f : kPathFields) {
        const bool top = std::string_view(f.key) == "output_dir";
        const auto& src = top ? doc : inputs;
        const auto it = src.find(f.key);
        if (it == src.end()) {
            if (f.required) throw ConfigError(std::string("manifest: missing '") + f.key + "'");
            continue;
        }
        if (!it->is_string() || it->get<std::string>().empty()) {
            throw ConfigError(std::string("manifest: '") + f.key + "' must be a non-empty path");
        }
        m.*(f.member) = resolve(it->get<std::string>());
    }

    if (const auto it = doc.find("audit_date"); it != doc.end()) {
        if (!it->is_string()) throw ConfigError("manifest: audit_date must be a YYYY-MM-DD string");
        m.audit_date = Date::try_parse(it->get<std::string>());
        if (!m.audit_date) throw ConfigError("manifest: invalid audit_date '" + it->get<std::string>() + "'");
    }
    if (const auto it = doc.find("exclude_source_countries"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("manifest: exclude_source_countries must be an array");
        for (const auto& c : *it) {
            const auto code = c.is_string() ? normalize_country(c.get<std::string>()) : std::nullopt;
            if (!code) throw ConfigError("manifest: invalid country in exclude_source_countries");
            m.exclude_source_countries.insert(*code);
        }
    }
    if (const auto it = doc.find("top_k"); it != doc.end()) {
        if (!it->is_number_unsigned() || it->get<std::size_t>() == 0) {
            throw ConfigError("manifest: top_k must be a positive integer");
        }
        m.top_k = it->get<std::size_t>();
    }
    if (const auto it = doc.find("sol_max_speed_km_per_ms"); it != doc.end()) {
        if (!it->is_number()) throw ConfigError("manifest: sol_max_speed_km_per_ms must be a number");
        m.sol_max_speed_km_per_ms = it->get<double>();
    }
    return m;
}

RunManifest RunManifest::load(const fs::path& path) {
    return parse(read_input(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void RunManifest::check_paths() const {
    for (const auto& f : kPathFields) {
        if (std::string_view(f.key) == "output_dir") continue;
        const auto& p = this->*(f.member);
        if (p.empty()) continue;
        if (!fs::exists(p)) throw ConfigError(std::string("manifest: ") + f.key + " not found: " + p.string());
    }
}

std::size_t InputDiagnostics::error_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : errors) n += v.size();
    return n;
}

LoadedRun load_run(const RunManifest& m, std::optional<Date> audit_date, unsigned jobs) {
    m.check_paths();
    const auto date = audit_date ? audit_date : m.audit_date;
    if (!date) throw ConfigError("no audit date: set audit_date in the manifest or pass --audit-date");
    const auto data = default_data_dir();
    const auto or_default = [&](const fs::path& p, const char* name) { return p.empty() ? data / name : p; };

    const auto ledger_path = or_default(m.ledger, "adequacy_ledger.csv");
    LoadedRun run{{}, {}, AdequacyLedger::parse_csv(read_input(ledger_path), *date), {}};
    auto& in = run.inputs;
    auto& cfg = run.config;
    auto& diag = run.diagnostics;

    const auto note = [&](const std::string& name, std::size_t records, const std::vector<ParseError>& errors) {
        diag.records[name] = records;
        if (!errors.empty()) diag.errors[name] = errors;
    };

    auto crawls = parse_crawls(read_input(m.crawls), jobs);
    note("crawls", crawls.records.size(), crawls.errors);
    in.crawls = std::move(crawls.records);

    auto src = parse_traceroutes(read_input(m.traceroutes_source), StageTag::SourceBased, jobs);
    note("traceroutes_source", src.records.size(), src.errors);
    in.source_traces = std::move(src.records);

    auto dst = parse_traceroutes(read_input(m.traceroutes_destination), StageTag::DestinationBased, jobs);
    note("traceroutes_destination", dst.records.size(), dst.errors);
    in.destination_traces = std::move(dst.records);

    auto geo = parse_geodb(read_input(m.geodb));
    note("geodb", geo.records.size(), geo.errors);
    if (!geo.warnings.empty()) diag.warnings["geodb"] = geo.warnings;
    in.geodb = std::move(geo.records);

    auto rdns = parse_rdns(read_input(m.rdns));
    note("rdns", rdns.records.size(), rdns.errors);
    in.rdns = std::move(rdns.records);

    auto asmap = parse_asmap(read_input(m.asmap));
    note("asmap", asmap.map.size(), asmap.errors);
    in.asmap = std::move(asmap.map);

    auto orgs = parse_as2org(read_input(m.as2org));
    note("as2org", orgs.map.size(), orgs.errors);
    in.orgmap = std::move(orgs.map);

    if (!m.resolutions.empty()) {
        auto res = parse_resolutions(read_input(m.resolutions));
        note("resolutions", res.map.size(), res.errors);
        in.resolutions = std::move(res.map);
    }

    in.trackers = parse_tracker_lists(m.easylist.string(), m.hosts_list.string(),
                                      or_default(m.manual_trackers, "manual_trackers.txt").string());
    for (std::size_t t = 0; t < 3; ++t) {
        if (in.trackers.tier_errors[t]) {
            throw ConfigError("tracker list " + std::string(to_string(static_cast<TrackerTier>(t))) + ": " +
                              *in.trackers.tier_errors[t]);
        }
    }

    if (!m.proxy_checks.empty()) {
        const auto table = csv::parse(read_input(m.proxy_checks));
        const auto cr = table.column("request_id"), ca = table.column("claimed_asn"),
                   cc = table.column("claimed_country"), oa = table.column("observed_asn"),
                   oc = table.column("observed_country");
        if (!cr || !ca || !cc || !oa || !oc) {
            throw ConfigError("proxy_checks: expected request_id,claimed_asn,claimed_country,observed_asn,observed_country");
        }
        std::vector<ParseError> errors;
        for (const auto& row : table.rows) {
            const auto at = [&](std::size_t i) {
                return i < row.fields.size() ? std::string(text::trim(row.fields[i])) : std::string();
            };
            const auto asn = [](const std::string& s) -> std::optional<std::uint32_t> {
                if (!text::is_ascii_digits(s) || s.empty() || s.size() > 10) return std::nullopt;
                const auto v = std::stoull(s);
                if (v == 0 || v > 0xFFFFFFFFULL) return std::nullopt;
                return static_cast<std::uint32_t>(v);
            };
            const auto a1 = asn(at(*ca)), a2 = asn(at(*oa));
            const auto c1 = normalize_country(at(*cc)), c2 = normalize_country(at(*oc));
            if (at(*cr).empty() || !a1 || !a2 || !c1 || !c2) {
                errors.push_back({row.line, "invalid proxy check row"});
                continue;
            }
            in.proxy_observations.emplace_back(at(*cr), Ascp::make(*a1, *c1), Ascp::make(*a2, *c2));
        }
        note("proxy_checks", in.proxy_observations.size(), errors);
    }

    cfg.thresholds = LatencyThresholdConfig::parse_json(read_input(or_default(m.thresholds, "thresholds.json")));
    if (m.sol_max_speed_km_per_ms) cfg.sol.max_speed_km_per_ms = *m.sol_max_speed_km_per_ms;
    cfg.sol.validate();
    cfg.geohints = GeohintDb::load_dir(or_default(m.geohints, "geohints").string());
    cfg.cookie_rules = parse_cookie_rules(read_input(or_default(m.cookie_rules, "cookie_rules.csv")));
    cfg.regions = parse_regions_csv(read_input(or_default(m.regions, "regions.csv")));
    if (!m.categories.empty()) cfg.categories = parse_categories_csv(read_input(m.categories));
    const auto google = or_default(m.google_extra, "google_extra.txt");
    if (fs::exists(google)) {
        const auto content = read_input(google);
        for (auto line : text::lines(content)) {
            line = text::trim(line);
            if (line.empty() || line.front() == '#') continue;
            const auto d = DomainName::parse(line);
            if (!d) throw ConfigError("google_extra: invalid domain '" + std::string(line) + "'");
            cfg.google_extra.insert(d->fqdn());
        }
    }
    cfg.exclude_source_countries = m.exclude_source_countries;
    cfg.top_k = m.top_k;
    cfg.jobs = jobs;
    return run;
}

}  // namespace dlaudit
