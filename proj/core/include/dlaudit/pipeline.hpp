#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dlaudit/adequacy.hpp"
#include "dlaudit/geodesy.hpp"
#include "dlaudit/ingest.hpp"
#include "dlaudit/labeling.hpp"
#include "dlaudit/latency.hpp"
#include "dlaudit/rdns.hpp"
#include "dlaudit/stats.hpp"

namespace dlaudit {

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

struct StageEntry {
    std::string stage;
    std::string verdict;
    std::string evidence;

    friend bool operator==(const StageEntry&, const StageEntry&) = default;
};

/// A server IP flowing through the pipeline.
struct ServerCandidate {
    IpAddress ip;
    std::optional<DomainName> hostname;
    std::set<Ascp> ascp_sources;
    std::set<DomainName> initial_sites;
    std::optional<CountryCode> inferred_country;
    std::vector<StageEntry> stage_trace;  // append-only

    void record(std::string stage, std::string verdict, std::string evidence = {});
};

/// Candidates sorted by IP with O(1) lookup.
class CandidateSet {
public:
    CandidateSet() = default;
    /// Merges duplicate IPs and sorts.
    explicit CandidateSet(std::vector<ServerCandidate> candidates);

    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] const std::vector<ServerCandidate>& items() const { return items_; }
    [[nodiscard]] std::vector<ServerCandidate>& items() { return items_; }
    [[nodiscard]] ServerCandidate* find(const IpAddress& ip);
    [[nodiscard]] const ServerCandidate* find(const IpAddress& ip) const;

private:
    std::vector<ServerCandidate> items_;
    std::unordered_map<IpAddress, std::size_t> index_;
};

/// Domain → IP lookups, preferring what traceroutes from the same vantage
/// resolved (target → dst_ip) over the global crawl-time table.
class Resolver {
public:
    Resolver(const ResolutionTable& global, const std::vector<TracerouteRecord>& source_traces);
    [[nodiscard]] std::optional<IpAddress> resolve(const Ascp& ascp, const DomainName& d) const;

private:
    const ResolutionTable* global_;
    std::map<std::pair<Ascp, DomainName>, IpAddress> per_ascp_;
};

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct GeodbStage {
    std::size_t input = 0;
    std::size_t unknown_country = 0;
    std::size_t adequate = 0;
    std::size_t kept = 0;
    std::set<IpAddress> kept_ips;
};

/// Keeps candidates whose geolocated country is non-adequate on `date`.
/// Unknown-country candidates are set aside and counted separately.
GeodbStage stage_geodb(CandidateSet& candidates, const GeoDb& geodb, const AdequacyLedger& ledger, Date date);

struct SourceTraceOutcome {
    std::size_t trace_index = 0;
    PolicyDecision decision;
    std::optional<GateVerdict> gate;

    [[nodiscard]] bool passed() const { return gate == GateVerdict::Candidate; }
};

struct SourceStage {
    std::size_t input = 0;
    std::size_t unresponsive = 0;
    std::size_t first_exceeds_last = 0;
    std::size_t below_gate = 0;
    std::size_t passed = 0;
    std::size_t diff_basis = 0;
    std::size_t last_hop_basis = 0;
    std::size_t untargeted = 0;  // traces to IPs outside the geodb survivors
    std::set<IpAddress> survivors;
    std::vector<SourceTraceOutcome> outcomes;  // one per targeted trace, input order

    [[nodiscard]] std::size_t excluded_unresponsive() const { return unresponsive + first_exceeds_last; }
};

/// Applies the source latency policy and the regional gate to every trace
/// whose dst_ip survived the geodb stage. An IP survives with >= 1 passing trace.
SourceStage stage_source(CandidateSet& candidates, const std::set<IpAddress>& geodb_survivors,
                         const std::vector<TracerouteRecord>& traces,
                         const LatencyThresholdConfig& thresholds, unsigned jobs = 1);

enum class DestVerdict { Unresponsive, InsufficientGranularity, SolInfeasible, Passed };

std::string_view to_string(DestVerdict v);

/// One destination-based measurement of a server IP, keyed by (ip, asn).
struct Measurement {
    IpAddress ip;
    std::uint32_t asn = 0;
    std::size_t trace_index = 0;
    DestVerdict verdict = DestVerdict::Unresponsive;
    std::optional<double> effective_ms;
    std::optional<LatencyBasis> basis;
    std::optional<double> distance_km;
    std::optional<RdnsOutcome> rdns;

    [[nodiscard]] bool final() const {
        return verdict == DestVerdict::Passed && rdns && *rdns != RdnsOutcome::IndicatesAdequate;
    }
};

struct DestinationStage {
    std::size_t input = 0;
    std::size_t unresponsive = 0;
    std::size_t granularity = 0;
    std::size_t sol_infeasible = 0;
    std::size_t passed = 0;
    std::size_t diff_basis = 0;
    std::size_t last_hop_basis = 0;
    std::size_t first_exceeds_last_kept = 0;
    std::size_t untargeted = 0;     // traces to IPs that did not survive the source stage
    std::size_t duplicates = 0;     // extra traces for an already measured (ip, asn)
    std::size_t not_measured = 0;   // source survivors without any destination trace
    std::vector<Measurement> measurements;  // sorted by (ip, asn)

    [[nodiscard]] std::size_t excluded_unresponsive() const { return unresponsive + granularity; }
};

/// Speed-of-light check of destination traces against the server's geolocated
/// point. Keeps one trace per (ip, asn): the earliest by (timestamp, msm_id).
DestinationStage stage_destination(CandidateSet& candidates, const std::set<IpAddress>& source_survivors,
                                   const std::vector<TracerouteRecord>& traces, const GeoDb& geodb,
                                   const SolConfig& sol, unsigned jobs = 1);

struct RdnsBreakdown {
    std::size_t confirms = 0;
    std::size_t reassigns = 0;
    std::size_t indicates_adequate = 0;
    std::size_t no_hostname = 0;
    std::size_t no_geohint = 0;

    [[nodiscard]] std::size_t total() const {
        return confirms + reassigns + indicates_adequate + no_hostname + no_geohint;
    }
};

struct RdnsStage {
    std::size_t input = 0;
    RdnsBreakdown breakdown;
    std::size_t kept = 0;
    std::map<std::string, std::size_t> hint_sources;  // hint source → measurements
};

/// Geohints of the last-hop hostname of every measurement that passed the
/// destination stage. ReassignsTo updates the candidate's inferred country.
RdnsStage stage_rdns(CandidateSet& candidates, DestinationStage& dest, const RdnsTable& rdns, const GeohintDb& db,
                     const AdequacyLedger& ledger, Date date);

struct Instance {
    DomainName initial_site;
    Ascp ascp;
    IpAddress server_ip;

    friend bool operator==(const Instance&, const Instance&) = default;
    friend auto operator<=>(const Instance& a, const Instance& b) {
        if (auto c = a.initial_site <=> b.initial_site; c != 0) return c;
        if (auto c = a.ascp.asn <=> b.ascp.asn; c != 0) return c;
        if (auto c = a.ascp.country <=> b.ascp.country; c != 0) return c;
        return a.server_ip <=> b.server_ip;
    }
};

struct FinalSample {
    std::set<IpAddress> ips;
    std::set<std::pair<IpAddress, std::uint32_t>> chains;  // surviving (ip, asn) measurements
    std::vector<Instance> instances;                       // sorted, distinct

    [[nodiscard]] std::size_t unique_ips() const { return ips.size(); }
    [[nodiscard]] std::size_t measurements() const { return chains.size(); }
};

/// Surviving measurements plus every (initial site, ascp) whose crawl loaded a
/// domain resolving to a surviving IP.
FinalSample final_sample(const DestinationStage& dest, const std::vector<CrawlLog>& crawls, const Resolver& resolver);

// ---------------------------------------------------------------------------
// Funnel
// ---------------------------------------------------------------------------

struct StageCounts {
    std::string stage;
    std::size_t input = 0;
    std::size_t excluded_unresponsive = 0;
    std::size_t excluded_adequate_or_gate = 0;
    std::size_t passed = 0;
    std::size_t unique_ips = 0;

    [[nodiscard]] bool conserved() const { return input == excluded_unresponsive + excluded_adequate_or_gate + passed; }
};

struct FunnelReport {
    StageCounts geodb;
    StageCounts source;
    StageCounts destination;
    StageCounts rdns;
    RdnsBreakdown rdns_breakdown;
    std::size_t final_measurements = 0;
    std::size_t final_unique_ips = 0;
    std::size_t instances = 0;
    std::map<std::string, std::size_t> detail;

    [[nodiscard]] bool conserved() const;
};

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

struct AuditInputs {
    std::vector<CrawlLog> crawls;
    std::vector<TracerouteRecord> source_traces;
    std::vector<TracerouteRecord> destination_traces;
    GeoDb geodb;
    RdnsTable rdns;
    AsMap asmap;
    OrgMap orgmap;
    ResolutionTable resolutions;
    TrackerDb trackers;
    /// (request id, claimed, observed) rows for the proxy cross-check; optional.
    std::vector<std::tuple<std::string, Ascp, Ascp>> proxy_observations;
};

struct AuditConfig {
    LatencyThresholdConfig thresholds = LatencyThresholdConfig::defaults();
    SolConfig sol;
    GeohintDb geohints;
    std::unordered_set<std::string> google_extra;
    std::set<CountryCode> exclude_source_countries;
    std::vector<CookieIdRule> cookie_rules = default_cookie_rules();
    EntropyHeuristic entropy;
    std::map<CountryCode, Region> regions = default_regions();
    std::map<DomainName, std::string> categories;
    std::size_t top_k = 10;
    unsigned jobs = 1;
};

struct TargetStats {
    std::size_t crawls = 0;
    std::size_t targets = 0;           // distinct (ascp, initial domain)
    std::size_t google_excluded = 0;   // targets that are Google-owned
    std::size_t country_excluded = 0;  // crawls from excluded source countries
    std::size_t failed = 0;            // crawls with status failed
    std::size_t unresolved_domains = 0;
};

struct ReviewItem {
    DomainName initial_site;
    DomainName tracker;
    std::string reason;
    std::string evidence;

    friend auto operator<=>(const ReviewItem& a, const ReviewItem& b) {
        if (auto c = a.initial_site <=> b.initial_site; c != 0) return c;
        if (auto c = a.tracker <=> b.tracker; c != 0) return c;
        return a.reason <=> b.reason;
    }
    friend bool operator==(const ReviewItem&, const ReviewItem&) = default;
};

struct ProxyCheckRow {
    std::string request_id;
    Ascp claimed;
    ProxyCheck verdict;
    std::size_t observed = 0;
};

struct AnovaOutcome {
    std::optional<RegionAnova> anova;
    std::string error;  // set when the test could not be run
};

/// Destination IP / source country pair.
struct Dscp {
    IpAddress ip;
    CountryCode source_country;

    friend bool operator==(const Dscp&, const Dscp&) = default;
    friend auto operator<=>(const Dscp&, const Dscp&) = default;
};

struct FinalTrace {
    std::size_t trace_index = 0;
    CountryCode source_country;
    CountryCode destination_country;
    IpAddress ip;
};

struct AuditReport {
    /// Traces after source-country exclusion; stage indices refer to these.
    std::vector<TracerouteRecord> source_traces;
    std::vector<TracerouteRecord> destination_traces;
    FunnelReport funnel;
    TargetStats targets;
    CandidateSet candidates;
    GeodbStage geodb_stage;
    SourceStage source_stage;
    DestinationStage destination_stage;
    RdnsStage rdns_stage;
    FinalSample final;
    std::vector<FinalTrace> final_traces;
    std::set<Dscp> source_dscps;  // every (dst_ip, source country) with a source trace
    std::vector<CountryCounts> country_counts;
    std::vector<CountryRateRow> rates;
    FlowMatrix flows;
    AnovaOutcome anova_ips;
    AnovaOutcome anova_trackers;
    std::vector<CookieSummaryRow> cookies;
    std::map<std::string, std::size_t> categories;
    std::vector<CdfPoint> cdf_source_all, cdf_source_confirmed, cdf_dest_all, cdf_dest_confirmed;
    std::vector<ReviewItem> review_queue;
    std::vector<ProxyCheckRow> proxy_checks;
    std::vector<std::string> warnings;
};

/// Runs every stage and analysis. Inputs are not modified; traces and crawls
/// from excluded source countries are dropped first.
AuditReport run_audit(const AuditInputs& inputs, const AuditConfig& config, const AdequacyLedger& ledger);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

using TruthTable = std::map<Dscp, CountryCode>;

/// CSV `ip,source_country,true_country`. Throws ConfigError on malformed rows.
TruthTable parse_truth_csv(std::string_view content);

struct ValidationMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> tpr, fnr, precision;

    [[nodiscard]] std::size_t total() const { return tp + fp + tn + fn; }
    ValidationMetrics& operator+=(const ValidationMetrics& o);
    void finalize();  // recomputes the rates from the counts
};

/// Positive = some source trace of the DSCP belongs to a final chain. Truth is
/// positive when the true country is non-adequate on the ledger's audit date.
/// Every DSCP seen in the source traces must have truth (MissingTruth);
/// truth-only DSCPs count as predicted negatives. Empty truth → EmptyInput.
ValidationMetrics run_validation(const TruthTable& truth, const AuditReport& report, const AdequacyLedger& ledger);

}  // namespace dlaudit
