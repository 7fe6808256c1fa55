#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "dlaudit/client.hpp"
#include "dlaudit/manifest.hpp"
#include "dlaudit/pipeline.hpp"
#include "dlaudit/report.hpp"
#include "dlaudit/stats.hpp"

namespace dlaudit::cli {

namespace {

namespace fs = std::filesystem;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

struct Globals {
    std::vector<std::string> manifests;
    std::string audit_date;
    unsigned jobs = 0;
    bool strict = false;
};

std::optional<Date> date_override(const Globals& g) {
    if (g.audit_date.empty()) return std::nullopt;
    const auto d = Date::try_parse(g.audit_date);
    if (!d) throw ConfigError("--audit-date: expected YYYY-MM-DD, got '" + g.audit_date + "'");
    return d;
}

const std::string& single_manifest(const Globals& g) {
    if (g.manifests.size() != 1) throw CLI::ValidationError("--manifest", "exactly one --manifest is required");
    return g.manifests.front();
}

void print_diagnostics(const InputDiagnostics& d, std::ostream& err, std::size_t per_file = 10) {
    for (const auto& [file, errors] : d.errors) {
        fmt::print(err, "{}: {} parse error(s)\n", file, errors.size());
        for (std::size_t i = 0; i < errors.size() && i < per_file; ++i) {
            fmt::print(err, "  line {}: {}\n", errors[i].line, errors[i].reason);
        }
    }
    for (const auto& [file, warnings] : d.warnings) {
        fmt::print(err, "{}: {} warning(s)\n", file, warnings.size());
        for (std::size_t i = 0; i < warnings.size() && i < per_file; ++i) {
            fmt::print(err, "  line {}: {}\n", warnings[i].line, warnings[i].reason);
        }
    }
}

struct Loaded {
    RunManifest manifest;
    LoadedRun run;
};

Loaded load(const std::string& path, const Globals& g) {
    auto m = RunManifest::load(path);
    m.check_paths();
    auto run = load_run(m, date_override(g), g.jobs);
    run.config.jobs = g.jobs;
    return {std::move(m), std::move(run)};
}

// Returns a non-zero exit code when --strict rejects the inputs.
int quality_gate(const Loaded& l, const Globals& g, std::ostream& err) {
    print_diagnostics(l.run.diagnostics, err);
    if (g.strict && l.run.diagnostics.error_count() > 0) {
        fmt::print(err, "--strict: {} input error(s); aborting\n", l.run.diagnostics.error_count());
        return kDataQuality;
    }
    return kOk;
}

int cmd_audit(const Globals& g, const std::string& out_override, std::ostream& out, std::ostream& err) {
    const auto l = load(single_manifest(g), g);
    if (const int rc = quality_gate(l, g, err)) return rc;
    const auto report = run_audit(l.run.inputs, l.run.config, l.run.ledger);
    const fs::path dir = out_override.empty() ? l.manifest.output_dir : fs::path(out_override);
    const auto files = write_audit_report(report, dir, l.run.config.top_k);
    for (const auto& w : report.warnings) fmt::print(err, "warning: {}\n", w);
    const auto& f = report.funnel;
    fmt::print(out, "geodb        {} -> {} ({} unique IPs)\n", f.geodb.input, f.geodb.passed, f.geodb.unique_ips);
    fmt::print(out, "source       {} -> {} ({} unique IPs)\n", f.source.input, f.source.passed, f.source.unique_ips);
    fmt::print(out, "destination  {} -> {}\n", f.destination.input, f.destination.passed);
    fmt::print(out, "rdns         {} -> {}\n", f.rdns.input, f.rdns.passed);
    fmt::print(out, "final        {} measurements, {} IPs, {} instances\n", f.final_measurements, f.final_unique_ips,
               f.instances);
    fmt::print(out, "wrote {} files to {}\n", files.size(), dir.string());
    return kOk;
}

int cmd_validate(const Globals& g, const std::vector<std::string>& truths, const std::vector<std::string>& names,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
    if (g.manifests.empty() || g.manifests.size() != truths.size()) {
        throw CLI::ValidationError("--truth", "give one --truth per --manifest");
    }
    if (!names.empty() && names.size() != truths.size()) {
        throw CLI::ValidationError("--name", "give one --name per --manifest");
    }
    std::vector<NamedMetrics> experiments;
    fs::path default_out;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const auto l = load(g.manifests[i], g);
        if (const int rc = quality_gate(l, g, err)) return rc;
        const auto truth = parse_truth_csv(read_text(truths[i]));
        const auto report = run_audit(l.run.inputs, l.run.config, l.run.ledger);
        auto metrics = run_validation(truth, report, l.run.ledger);
        const auto name = names.empty() ? fs::path(g.manifests[i]).parent_path().filename().string() : names[i];
        experiments.push_back({name.empty() ? fmt::format("experiment{}", i + 1) : name, metrics});
        if (i == 0) default_out = l.manifest.output_dir / "metrics.json";
    }
    const auto doc = metrics_json(experiments);
    write_file(out_path.empty() ? default_out : fs::path(out_path), doc);
    out << doc;
    return kOk;
}

int cmd_anova(const std::string& rates_path, const std::string& regions_path, const std::vector<std::string>& columns,
              std::ostream& out) {
    const auto rows = parse_rates_csv(read_text(rates_path));
    const auto regions = regions_path.empty() ? default_regions() : parse_regions_csv(read_text(regions_path));
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& c : columns) {
        double CountryRateRow::*member = &CountryRateRow::pct_ips;
        if (c == "traceroutes") member = &CountryRateRow::pct_traceroutes;
        if (c == "trackers") member = &CountryRateRow::pct_tracker_ips;
        doc[c] = nlohmann::ordered_json::parse(anova_result_json(anova_by_region(rows, regions, member)));
    }
    out << doc.dump(2) << "\n";
    return kOk;
}

int cmd_ingest_check(const Globals& g, std::ostream& out, std::ostream& err) {
    const auto l = load(single_manifest(g), g);
    const auto& d = l.run.diagnostics;
    for (const auto& [file, n] : d.records) {
        const auto e = d.errors.contains(file) ? d.errors.at(file).size() : 0;
        const auto w = d.warnings.contains(file) ? d.warnings.at(file).size() : 0;
        fmt::print(out, "{:<26} {:>8} records {:>6} errors {:>6} warnings\n", file, n, e, w);
    }
    print_diagnostics(d, err);
    if (g.strict && d.error_count() > 0) return kDataQuality;
    return kOk;
}

int cmd_cdf(const Globals& g, const std::string& out_override, std::ostream& out, std::ostream& err) {
    const auto l = load(single_manifest(g), g);
    if (const int rc = quality_gate(l, g, err)) return rc;
    const auto r = run_audit(l.run.inputs, l.run.config, l.run.ledger);
    const fs::path dir = out_override.empty() ? l.manifest.output_dir : fs::path(out_override);
    write_file(dir / "cdf_source.csv", cdf_csv(r.cdf_source_all, r.cdf_source_confirmed));
    write_file(dir / "cdf_dest.csv", cdf_csv(r.cdf_dest_all, r.cdf_dest_confirmed));
    write_file(dir / "cdf_source.svg", cdf_svg(r.cdf_source_all, r.cdf_source_confirmed, "Source-based latency"));
    write_file(dir / "cdf_dest.svg", cdf_svg(r.cdf_dest_all, r.cdf_dest_confirmed, "Destination-based latency"));
    fmt::print(out, "source: {} points, destination: {} points\n", r.cdf_source_all.size(), r.cdf_dest_all.size());
    return kOk;
}

struct FetchOptions {
    std::string transport = "replay";
    std::string fixtures = "fixtures/replay";
    std::string endpoint = "https://atlas.ripe.net";
    std::vector<std::string> ids;
    std::vector<std::string> targets;
    std::vector<std::string> probes;
    std::string stage = "source";
    int packets = 3;
    int timeout_ms = 4000;
    unsigned max_in_flight = 4;
    int retry_sleep_ms = 1000;
    int max_attempts = 5;
    std::string out;
};

Probe parse_probe(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw CLI::ValidationError("--probe", "expected ID:ASN:CC, got '" + s + "'");
    const auto id = parse_u64(parts[0]);
    const auto asn = parse_u64(parts[1]);
    const auto cc = normalize_country(parts[2]);
    if (!id || !asn || !cc || *asn == 0 || *asn > 0xFFFFFFFFull) {
        throw CLI::ValidationError("--probe", "expected ID:ASN:CC, got '" + s + "'");
    }
    return Probe{*id, Ascp::make(static_cast<std::uint32_t>(*asn), *cc), std::nullopt, true};
}

int cmd_fetch(const FetchOptions& o, std::ostream& out, std::ostream& err) {
    std::unique_ptr<Transport> transport;
    if (o.transport == "live") {
        const char* key = std::getenv("DLAUDIT_ATLAS_API_KEY");
        LiveConfig cfg;
        cfg.retry_sleep = std::chrono::milliseconds(o.retry_sleep_ms);
        cfg.max_attempts = o.max_attempts;
        transport = std::make_unique<LiveTransport>(make_http_client(o.endpoint, key ? key : ""), cfg);
    } else {
        transport = std::make_unique<ReplayTransport>(o.fixtures);
    }

    if (!o.targets.empty()) {
        MeasurementSpec spec;
        spec.targets = o.targets;
        for (const auto& p : o.probes) spec.probes.push_back(parse_probe(p));
        spec.packets = o.packets;
        spec.timeout_ms = o.timeout_ms;
        spec.stage = o.stage == "destination" ? StageTag::DestinationBased : StageTag::SourceBased;
        out << transport->create_measurement(spec) << "\n";
        return kOk;
    }
    if (o.ids.empty()) throw CLI::ValidationError("fetch", "give --id to fetch or --target/--probe to create");
    try {
        const auto content = fetch_all(*transport, o.ids, o.max_in_flight);
        if (o.out.empty()) {
            out << content;
        } else {
            write_file(o.out, content);
            const auto lines = std::count(content.begin(), content.end(), '\n');
            fmt::print(out, "wrote {} traceroutes to {}\n", lines, o.out);
        }
    } catch (const Incomplete& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kConfig;
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Data localization auditor: locates servers reached from EU vantage points and flags those in "
                 "non-adequate countries.",
                 "dlaudit"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Globals g;
    app.add_option("--manifest", g.manifests, "Run manifest (JSON); repeat for validate")->check(CLI::ExistingFile);
    app.add_option("--audit-date", g.audit_date, "Audit date YYYY-MM-DD (overrides the manifest)");
    app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_flag("--strict", g.strict, "Exit 2 when any input record fails to parse");

    std::string audit_out;
    auto* audit = app.add_subcommand("audit", "Run every stage and write all reports");
    audit->add_option("--out", audit_out, "Output directory (defaults to the manifest's output_dir)");

    std::vector<std::string> truths, names;
    std::string metrics_out;
    auto* validate = app.add_subcommand("validate", "Score inferences against ground truth; writes metrics.json");
    validate->add_option("--truth", truths, "Truth CSV ip,source_country,true_country; one per --manifest")
        ->check(CLI::ExistingFile);
    validate->add_option("--name", names, "Experiment name; one per --manifest");
    validate->add_option("--out", metrics_out, "metrics.json path (defaults to the first manifest's output_dir)");

    std::string rates_path, regions_path;
    std::vector<std::string> columns{"ips", "trackers"};
    auto* anova = app.add_subcommand("anova", "One-way ANOVA of a rates table across regions");
    anova->add_option("--rates", rates_path, "rates.csv")->required()->check(CLI::ExistingFile);
    anova->add_option("--regions", regions_path, "country,region CSV (defaults to the bundled map)")
        ->check(CLI::ExistingFile);
    anova->add_option("--column", columns, "Columns to test")
        ->check(CLI::IsMember({"traceroutes", "ips", "trackers"}));

    auto* ingest = app.add_subcommand("ingest-check", "Parse every input and report errors");

    FetchOptions fo;
    auto* fetch = app.add_subcommand("fetch", "Create measurements or fetch their results as ingest JSON lines");
    fetch->add_option("--transport", fo.transport, "replay or live")->check(CLI::IsMember({"replay", "live"}));
    fetch->add_option("--fixtures", fo.fixtures, "Replay fixture directory");
    fetch->add_option("--endpoint", fo.endpoint, "Live API base URL; key from DLAUDIT_ATLAS_API_KEY");
    fetch->add_option("--id", fo.ids, "Measurement id to fetch (repeatable)");
    fetch->add_option("--target", fo.targets, "Create a measurement towards this host or IP (repeatable)");
    fetch->add_option("--probe", fo.probes, "Probe as ID:ASN:CC (repeatable)");
    fetch->add_option("--stage", fo.stage, "source or destination")->check(CLI::IsMember({"source", "destination"}));
    fetch->add_option("--packets", fo.packets, "Packets per hop")->check(CLI::PositiveNumber);
    fetch->add_option("--timeout-ms", fo.timeout_ms, "Per-packet timeout")->check(CLI::PositiveNumber);
    fetch->add_option("--max-in-flight", fo.max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
    fetch->add_option("--retry-sleep-ms", fo.retry_sleep_ms, "Sleep after a 429 response")
        ->check(CLI::NonNegativeNumber);
    fetch->add_option("--max-attempts", fo.max_attempts, "Attempts per request")->check(CLI::PositiveNumber);
    fetch->add_option("--out", fo.out, "Write results here instead of stdout");

    std::string cdf_out;
    auto* cdf = app.add_subcommand("cdf", "Write the latency CDF tables and plots");
    cdf->add_option("--out", cdf_out, "Output directory (defaults to the manifest's output_dir)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*audit) return cmd_audit(g, audit_out, out, err);
        if (*validate) return cmd_validate(g, truths, names, metrics_out, out, err);
        if (*anova) return cmd_anova(rates_path, regions_path, columns, out);
        if (*ingest) return cmd_ingest_check(g, out, err);
        if (*fetch) return cmd_fetch(fo, out, err);
        if (*cdf) return cmd_cdf(g, cdf_out, out, err);
    } catch (const CLI::ValidationError& e) {
        fmt::print(err, "usage error: {}\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kConfig;
    }
    return kUsage;
}

}  // namespace dlaudit::cli
