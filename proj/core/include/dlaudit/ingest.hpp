#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "dlaudit/date.hpp"
#include "dlaudit/error.hpp"
#include "dlaudit/ip.hpp"
#include "dlaudit/model.hpp"

namespace dlaudit {

// ---------------------------------------------------------------------------
// Traceroutes
// ---------------------------------------------------------------------------

enum class StageTag { SourceBased, DestinationBased };

std::string_view to_string(StageTag s);

struct Reply {
    std::optional<IpAddress> from_ip;
    std::optional<double> rtt_ms;  // > 0 when present

    friend bool operator==(const Reply&, const Reply&) = default;
};

struct Hop {
    int index = 1;  // >= 1
    std::vector<Reply> replies;

    friend bool operator==(const Hop&, const Hop&) = default;
};

using TraceTarget = std::variant<DomainName, IpAddress>;

std::string target_to_string(const TraceTarget& t);

struct TracerouteRecord {
    std::string measurement_id;
    Ascp source;
    std::optional<GeoPoint> probe_point;
    TraceTarget target;
    IpAddress dst_ip;
    std::vector<Hop> hops;  // ascending by index
    StageTag stage_tag = StageTag::SourceBased;
    Timestamp timestamp{};

    friend bool operator==(const TracerouteRecord&, const TracerouteRecord&) = default;
};

template <typename T>
struct ParseBatch {
    std::vector<T> records;
    std::vector<ParseError> errors;
    std::size_t lines_in = 0;  // non-blank input lines; == records + errors
};

/// Parses JSON-lines traceroutes. When `expected` is set, lines tagged with the
/// other stage are rejected. Never throws on bad data; output follows input order.
ParseBatch<TracerouteRecord> parse_traceroutes(std::string_view content, std::optional<StageTag> expected = {},
                                               unsigned jobs = 1);
std::string serialize_traceroute(const TracerouteRecord& r);

// ---------------------------------------------------------------------------
// Crawl logs
// ---------------------------------------------------------------------------

struct Cookie {
    std::string name;  // non-empty
    std::string value;
    DomainName site;

    friend bool operator==(const Cookie&, const Cookie&) = default;
};

enum class FetchStatus { Ok, Failed };

struct CrawlLog {
    Ascp ascp;
    std::string initial_url;
    DomainName initial_domain;  // host of initial_url without "www."
    std::vector<DomainName> dns_requests;
    std::vector<Cookie> cookies;
    FetchStatus fetch_status = FetchStatus::Ok;
    int attempt_ladder_index = 1;  // 1..4

    friend bool operator==(const CrawlLog&, const CrawlLog&) = default;
};

ParseBatch<CrawlLog> parse_crawls(std::string_view content, unsigned jobs = 1);
std::string serialize_crawl(const CrawlLog& c);

/// Host part of an http(s) URL, or nullopt.
std::optional<DomainName> url_host(std::string_view url);

// ---------------------------------------------------------------------------
// Geolocation, rDNS, routing tables
// ---------------------------------------------------------------------------

using GeoDb = std::unordered_map<IpAddress, GeoRecord>;

struct GeoDbParse {
    GeoDb records;
    std::vector<ParseError> errors;
    std::vector<ParseError> warnings;  // duplicate IPs (last row wins)
};

/// CSV with header `ip,country,lat,lon,granularity`.
GeoDbParse parse_geodb(std::string_view content);
std::string serialize_geodb(const GeoDb& db);

struct RdnsRecord {
    IpAddress ip;
    std::optional<DomainName> hostname;

    friend bool operator==(const RdnsRecord&, const RdnsRecord&) = default;
};

using RdnsTable = std::unordered_map<IpAddress, std::optional<DomainName>>;

struct RdnsParse {
    RdnsTable records;
    std::vector<ParseError> errors;
};

/// CSV `ip,hostname`; an empty hostname records a failed lookup.
RdnsParse parse_rdns(std::string_view content);

/// Longest-prefix IP → ASN table.
class AsMap {
public:
    void insert(const IpPrefix& prefix, std::uint32_t asn);
    [[nodiscard]] std::optional<std::uint32_t> lookup(const IpAddress& ip) const;
    [[nodiscard]] std::size_t size() const { return size_; }

private:
    // Keyed by (family, prefix length) → masked network → asn.
    std::map<std::pair<int, int>, std::unordered_map<IpAddress, std::uint32_t>, std::greater<>> tables_;
    std::size_t size_ = 0;
};

using OrgMap = std::unordered_map<std::uint32_t, std::string>;

struct AsMapParse {
    AsMap map;
    std::vector<ParseError> errors;
};

struct OrgMapParse {
    OrgMap map;
    std::vector<ParseError> errors;
};

/// CSV `prefix,asn`.
AsMapParse parse_asmap(std::string_view content);
/// CSV `asn,org`.
OrgMapParse parse_as2org(std::string_view content);

/// Domain → IP captured at crawl time (CSV `domain,ip`).
using ResolutionTable = std::unordered_map<DomainName, IpAddress>;

struct ResolutionParse {
    ResolutionTable map;
    std::vector<ParseError> errors;
};

ResolutionParse parse_resolutions(std::string_view content);

// ---------------------------------------------------------------------------
// Tracker lists
// ---------------------------------------------------------------------------

enum class TrackerTier { EasyList = 0, HostsList = 1, Manual = 2 };

std::string_view to_string(TrackerTier t);

/// Three ordered tracker tiers. A tier whose file could not be read is empty
/// and carries its error; the other tiers are unaffected.
struct TrackerDb {
    std::array<std::unordered_set<std::string>, 3> tiers;
    std::array<std::optional<std::string>, 3> tier_errors;
    std::array<std::size_t, 3> ignored_lines{};

    [[nodiscard]] const std::unordered_set<std::string>& tier(TrackerTier t) const {
        return tiers[static_cast<std::size_t>(t)];
    }
};

/// Domain-anchor subset of Adblock Plus syntax: `||domain^` (options after `$`
/// ignored) and bare hostnames. Everything else is counted as ignored.
std::unordered_set<std::string> parse_easylist(std::string_view content, std::size_t* ignored = nullptr);
/// `0.0.0.0 domain [domain...]` / `127.0.0.1 domain` lines.
std::unordered_set<std::string> parse_hosts_list(std::string_view content, std::size_t* ignored = nullptr);
/// One domain per line, optionally followed by whitespace/comma and a note.
std::unordered_set<std::string> parse_manual_trackers(std::string_view content, std::size_t* ignored = nullptr);

TrackerDb parse_tracker_lists(const std::string& easylist_path, const std::string& hosts_path,
                              const std::string& manual_path);

}  // namespace dlaudit
