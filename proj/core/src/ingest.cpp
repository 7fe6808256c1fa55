#include "dlaudit/ingest.hpp"

#include <charconv>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "dlaudit/csv.hpp"
#include "dlaudit/parallel.hpp"
#include "text.hpp"

namespace dlaudit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

/// Thrown inside a single line's parser and converted to a ParseError.
struct LineError {
    std::string reason;
};

[[noreturn]] void fail(std::string reason) { throw LineError{std::move(reason)}; }

const json& require(const json& obj, const char* key, const char* missing_reason = nullptr) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) fail(missing_reason ? missing_reason : std::string("missing ") + key);
    return *it;
}

std::string as_string(const json& v, const char* key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    fail(std::string(key) + " must be a string");
}

std::uint32_t as_asn(const json& v, const char* key) {
    if (v.is_number_integer()) {
        const auto n = v.get<long long>();
        if (n >= 1 && n <= 0xFFFFFFFFLL) return static_cast<std::uint32_t>(n);
    } else if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s.rfind("AS", 0) == 0 || s.rfind("as", 0) == 0) s = s.substr(2);
        std::uint32_t n = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec == std::errc() && p == s.data() + s.size() && n >= 1) return n;
    }
    fail(std::string(key) + " must be a positive AS number");
}

CountryCode as_country(const json& v, const char* key) {
    if (v.is_string()) {
        if (auto c = normalize_country(v.get<std::string>())) return *c;
    }
    fail(std::string("invalid ") + key);
}

IpAddress as_ip(const json& v, const char* key) {
    if (v.is_string()) {
        if (auto ip = IpAddress::parse(v.get<std::string>())) return *ip;
    }
    fail(std::string("invalid ") + key);
}

std::optional<double> optional_number(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(std::string(key) + " must be a number");
    return it->get<double>();
}

template <typename T, typename ParseLine>
ParseBatch<T> parse_jsonl(std::string_view content, unsigned jobs, ParseLine&& parse_line) {
    struct Indexed {
        std::size_t line;
        std::string_view text;
    };
    std::vector<Indexed> work;
    std::size_t lineno = 0;
    for (auto l : text::lines(content)) {
        ++lineno;
        if (!text::trim(l).empty()) work.push_back({lineno, l});
    }
    std::vector<std::variant<T, ParseError>> results(work.size(), ParseError{});
    parallel_for(work.size(), jobs, [&](std::size_t i) {
        try {
            const auto doc = json::parse(work[i].text, nullptr, false);
            if (doc.is_discarded()) fail("invalid JSON");
            if (!doc.is_object()) fail("record must be a JSON object");
            results[i] = parse_line(doc);
        } catch (const LineError& e) {
            results[i] = ParseError{work[i].line, e.reason};
        } catch (const std::exception& e) {
            results[i] = ParseError{work[i].line, e.what()};
        }
    });
    ParseBatch<T> batch;
    batch.lines_in = work.size();
    for (auto& r : results) {
        if (auto* rec = std::get_if<T>(&r)) {
            batch.records.push_back(std::move(*rec));
        } else {
            batch.errors.push_back(std::get<ParseError>(r));
        }
    }
    return batch;
}

TracerouteRecord parse_traceroute_json(const json& doc, std::optional<StageTag> expected) {
    const auto& msm = require(doc, "msm_id");
    const auto asn = as_asn(require(doc, "src_asn"), "src_asn");
    const auto country = as_country(require(doc, "src_country"), "src_country");

    std::optional<GeoPoint> probe;
    const auto lat = optional_number(doc, "probe_lat");
    const auto lon = optional_number(doc, "probe_lon");
    if (lat.has_value() != lon.has_value()) fail("probe_lat and probe_lon must appear together");
    if (lat) {
        GeoPoint p{*lat, *lon};
        if (!p.valid()) fail("probe coordinates out of range");
        probe = p;
    }

    const auto target_str = as_string(require(doc, "target"), "target");
    TraceTarget target = [&]() -> TraceTarget {
        if (auto ip = IpAddress::parse(target_str)) return *ip;
        if (auto d = DomainName::parse(target_str)) return *d;
        fail("invalid target");
    }();

    const json* dst = nullptr;
    for (const char* key : {"dst_ip", "dst_addr"}) {
        const auto it = doc.find(key);
        if (it != doc.end() && !it->is_null()) {
            dst = &*it;
            break;
        }
    }
    if (!dst) fail("missing dst_addr");
    const auto dst_ip = as_ip(*dst, "dst_ip");

    const auto stage_str = as_string(require(doc, "stage"), "stage");
    StageTag stage;
    if (stage_str == "source") {
        stage = StageTag::SourceBased;
    } else if (stage_str == "destination") {
        stage = StageTag::DestinationBased;
    } else {
        fail("stage must be 'source' or 'destination'");
    }
    if (expected && *expected != stage) fail("unexpected stage '" + stage_str + "'");

    const auto& ts = require(doc, "timestamp");
    Timestamp timestamp{};
    if (ts.is_number_integer()) {
        timestamp = Timestamp{std::chrono::seconds{ts.get<long long>()}};
    } else if (ts.is_string()) {
        const auto parsed = parse_timestamp(ts.get<std::string>());
        if (!parsed) fail("invalid timestamp");
        timestamp = *parsed;
    } else {
        fail("invalid timestamp");
    }

    const auto& hops_json = require(doc, "hops");
    if (!hops_json.is_array()) fail("hops must be an array");
    std::vector<Hop> hops;
    hops.reserve(hops_json.size());
    for (const auto& h : hops_json) {
        if (!h.is_object()) fail("hop must be an object");
        const auto& idx = require(h, "hop");
        if (!idx.is_number_integer() || idx.get<long long>() < 1 || idx.get<long long>() > 255) {
            fail("hop index must be an integer in [1, 255]");
        }
        Hop hop;
        hop.index = static_cast<int>(idx.get<long long>());
        if (!hops.empty() && hop.index <= hops.back().index) fail("hops out of order");
        const auto it = h.find("replies");
        if (it != h.end() && !it->is_null()) {
            if (!it->is_array()) fail("replies must be an array");
            for (const auto& r : *it) {
                if (!r.is_object()) fail("reply must be an object");
                Reply reply;
                const auto from = r.find("from");
                if (from != r.end() && !from->is_null() && !(from->is_string() && from->get<std::string>() == "*")) {
                    reply.from_ip = as_ip(*from, "reply from");
                }
                reply.rtt_ms = optional_number(r, "rtt");
                if (reply.rtt_ms && !(*reply.rtt_ms > 0.0 && std::isfinite(*reply.rtt_ms))) {
                    fail("rtt must be positive");
                }
                hop.replies.push_back(reply);
            }
        }
        hops.push_back(std::move(hop));
    }

    return TracerouteRecord{as_string(msm, "msm_id"), Ascp::make(asn, country), probe, std::move(target),
                            dst_ip, std::move(hops), stage, timestamp};
}

std::optional<DomainName> cookie_site(const std::string& s) {
    std::string_view v = s;
    while (!v.empty() && v.front() == '.') v.remove_prefix(1);
    return DomainName::parse(v);
}

CrawlLog parse_crawl_json(const json& doc) {
    const auto asn = as_asn(require(doc, "asn"), "asn");
    const auto country = as_country(require(doc, "country"), "country");
    const auto url = as_string(require(doc, "initial_url"), "initial_url");
    const auto host = url_host(url);
    if (!host) fail("initial_url has no valid host");

    const auto status_str = as_string(require(doc, "status"), "status");
    FetchStatus status;
    if (status_str == "ok") {
        status = FetchStatus::Ok;
    } else if (status_str == "failed") {
        status = FetchStatus::Failed;
    } else {
        fail("status must be 'ok' or 'failed'");
    }

    const auto& attempt = require(doc, "attempt");
    if (!attempt.is_number_integer() || attempt.get<long long>() < 1 || attempt.get<long long>() > 4) {
        fail("attempt must be in 1..4");
    }

    CrawlLog log{Ascp::make(asn, country), url, host->without_www(), {}, {}, status,
                 static_cast<int>(attempt.get<long long>())};

    if (const auto it = doc.find("dns"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) fail("dns must be an array");
        for (const auto& d : *it) {
            if (!d.is_string()) fail("dns entries must be strings");
            auto name = DomainName::parse(d.get<std::string>());
            if (!name) fail("invalid dns entry '" + d.get<std::string>() + "'");
            log.dns_requests.push_back(std::move(*name));
        }
    }
    if (const auto it = doc.find("cookies"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) fail("cookies must be an array");
        for (const auto& c : *it) {
            if (!c.is_object()) fail("cookie must be an object");
            const auto name = as_string(require(c, "name"), "cookie name");
            if (name.empty()) fail("cookie name must be non-empty");
            const auto vit = c.find("value");
            std::string value = (vit != c.end() && vit->is_string()) ? vit->get<std::string>() : std::string();
            auto site = cookie_site(as_string(require(c, "site"), "cookie site"));
            if (!site) fail("invalid cookie site");
            log.cookies.push_back(Cookie{name, std::move(value), std::move(*site)});
        }
    }
    if (status == FetchStatus::Ok) {
        bool seen = false;
        for (const auto& d : log.dns_requests) seen = seen || d.without_www() == log.initial_domain;
        if (!seen) fail("dns requests do not include the initial domain");
    }
    return log;
}

std::optional<double> parse_double(std::string_view s) {
    s = text::trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::uint32_t> parse_asn_field(std::string_view s) {
    s = text::trim(s);
    if (s.size() > 2 && (s.substr(0, 2) == "AS" || s.substr(0, 2) == "as")) s.remove_prefix(2);
    std::uint32_t n = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || p != s.data() + s.size() || n == 0) return std::nullopt;
    return n;
}

std::string field_at(const csv::Row& row, std::size_t i) {
    return i < row.fields.size() ? std::string(text::trim(row.fields[i])) : std::string();
}

std::size_t require_column(const csv::Table& t, std::string_view name, std::string_view file) {
    if (auto c = t.column(name)) return *c;
    throw ConfigError(std::string(file) + ": missing column '" + std::string(name) + "'");
}

}  // namespace

std::string_view to_string(StageTag s) { return s == StageTag::SourceBased ? "source" : "destination"; }

std::string target_to_string(const TraceTarget& t) {
    return std::visit([](const auto& v) -> std::string {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DomainName>) {
            return v.fqdn();
        } else {
            return v.to_string();
        }
    }, t);
}

ParseBatch<TracerouteRecord> parse_traceroutes(std::string_view content, std::optional<StageTag> expected,
                                               unsigned jobs) {
    return parse_jsonl<TracerouteRecord>(content, jobs,
                                         [&](const json& doc) { return parse_traceroute_json(doc, expected); });
}

std::string serialize_traceroute(const TracerouteRecord& r) {
    ordered_json j;
    j["msm_id"] = r.measurement_id;
    j["src_asn"] = r.source.asn;
    j["src_country"] = r.source.country.to_string();
    if (r.probe_point) {
        j["probe_lat"] = r.probe_point->lat;
        j["probe_lon"] = r.probe_point->lon;
    }
    j["target"] = target_to_string(r.target);
    j["dst_ip"] = r.dst_ip.to_string();
    j["stage"] = to_string(r.stage_tag);
    j["timestamp"] = format_timestamp(r.timestamp);
    auto hops = ordered_json::array();
    for (const auto& h : r.hops) {
        ordered_json hop;
        hop["hop"] = h.index;
        auto replies = ordered_json::array();
        for (const auto& rep : h.replies) {
            ordered_json o = ordered_json::object();
            if (rep.from_ip) o["from"] = rep.from_ip->to_string();
            if (rep.rtt_ms) o["rtt"] = *rep.rtt_ms;
            replies.push_back(std::move(o));
        }
        hop["replies"] = std::move(replies);
        hops.push_back(std::move(hop));
    }
    j["hops"] = std::move(hops);
    return j.dump();
}

std::optional<DomainName> url_host(std::string_view url) {
    const auto scheme = url.find("://");
    if (scheme == std::string_view::npos) return std::nullopt;
    const auto proto = text::to_lower(url.substr(0, scheme));
    if (proto != "http" && proto != "https") return std::nullopt;
    auto rest = url.substr(scheme + 3);
    rest = rest.substr(0, rest.find_first_of("/?#"));
    if (const auto at = rest.rfind('@'); at != std::string_view::npos) rest.remove_prefix(at + 1);
    rest = rest.substr(0, rest.find(':'));
    return DomainName::parse(rest);
}

ParseBatch<CrawlLog> parse_crawls(std::string_view content, unsigned jobs) {
    return parse_jsonl<CrawlLog>(content, jobs, parse_crawl_json);
}

std::string serialize_crawl(const CrawlLog& c) {
    ordered_json j;
    j["asn"] = c.ascp.asn;
    j["country"] = c.ascp.country.to_string();
    j["initial_url"] = c.initial_url;
    j["status"] = c.fetch_status == FetchStatus::Ok ? "ok" : "failed";
    j["attempt"] = c.attempt_ladder_index;
    auto dns = ordered_json::array();
    for (const auto& d : c.dns_requests) dns.push_back(d.fqdn());
    j["dns"] = std::move(dns);
    auto cookies = ordered_json::array();
    for (const auto& k : c.cookies) {
        cookies.push_back(ordered_json{{"name", k.name}, {"value", k.value}, {"site", k.site.fqdn()}});
    }
    j["cookies"] = std::move(cookies);
    return j.dump();
}

GeoDbParse parse_geodb(std::string_view content) {
    const auto table = csv::parse(content);
    const auto c_ip = require_column(table, "ip", "geodb"), c_country = require_column(table, "country", "geodb"),
               c_lat = require_column(table, "lat", "geodb"), c_lon = require_column(table, "lon", "geodb"),
               c_gran = require_column(table, "granularity", "geodb");
    GeoDbParse out;
    for (const auto& row : table.rows) {
        const auto ip = IpAddress::parse(field_at(row, c_ip));
        if (!ip) {
            out.errors.push_back({row.line, "invalid ip"});
            continue;
        }
        std::optional<CountryCode> country;
        if (const auto cs = field_at(row, c_country); !cs.empty()) {
            country = normalize_country(cs);
            if (!country) {
                out.errors.push_back({row.line, "unknown country '" + cs + "'"});
                continue;
            }
        }
        const auto lat_s = field_at(row, c_lat), lon_s = field_at(row, c_lon);
        std::optional<GeoPoint> point;
        if (!lat_s.empty() || !lon_s.empty()) {
            const auto lat = parse_double(lat_s), lon = parse_double(lon_s);
            if (!lat || !lon || !GeoPoint{*lat, *lon}.valid()) {
                out.errors.push_back({row.line, "invalid coordinates"});
                continue;
            }
            point = GeoPoint{*lat, *lon};
        }
        auto gran = parse_granularity(field_at(row, c_gran));
        if (!gran) {
            out.errors.push_back({row.line, "unknown granularity"});
            continue;
        }
        if (!country && *gran != Granularity::None) {
            out.errors.push_back({row.line, "granularity requires a country"});
            continue;
        }
        if (!point) gran = country ? Granularity::Country : Granularity::None;
        const auto [it, inserted] = out.records.insert_or_assign(*ip, GeoRecord::make(*ip, country, point, *gran));
        if (!inserted) out.warnings.push_back({row.line, "duplicate ip " + ip->to_string() + " (last row wins)"});
    }
    return out;
}

std::string serialize_geodb(const GeoDb& db) {
    std::vector<const GeoRecord*> rows;
    for (const auto& [ip, rec] : db) rows.push_back(&rec);
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->ip < b->ip; });
    std::string out = "ip,country,lat,lon,granularity\n";
    for (const auto* r : rows) {
        json lat = r->point ? json(r->point->lat) : json(), lon = r->point ? json(r->point->lon) : json();
        out += r->ip.to_string() + "," + (r->country ? r->country->to_string() : "") + "," +
               (r->point ? lat.dump() : "") + "," + (r->point ? lon.dump() : "") + "," +
               std::string(to_string(r->granularity)) + "\n";
    }
    return out;
}

RdnsParse parse_rdns(std::string_view content) {
    const auto table = csv::parse(content);
    const auto c_ip = require_column(table, "ip", "rdns"), c_host = require_column(table, "hostname", "rdns");
    RdnsParse out;
    for (const auto& row : table.rows) {
        const auto ip = IpAddress::parse(field_at(row, c_ip));
        if (!ip) {
            out.errors.push_back({row.line, "invalid ip"});
            continue;
        }
        const auto host_s = field_at(row, c_host);
        std::optional<DomainName> host;
        if (!host_s.empty()) {
            host = DomainName::parse(host_s);
            if (!host) {
                out.errors.push_back({row.line, "invalid hostname '" + host_s + "'"});
                continue;
            }
        }
        out.records.insert_or_assign(*ip, host);
    }
    return out;
}

void AsMap::insert(const IpPrefix& prefix, std::uint32_t asn) {
    auto& table = tables_[{static_cast<int>(prefix.network.family()), prefix.length}];
    if (table.insert_or_assign(prefix.network, asn).second) ++size_;
}

std::optional<std::uint32_t> AsMap::lookup(const IpAddress& ip) const {
    const int family = static_cast<int>(ip.family());
    for (const auto& [key, table] : tables_) {
        if (key.first != family) continue;
        if (const auto it = table.find(ip.masked(key.second)); it != table.end()) return it->second;
    }
    return std::nullopt;
}

AsMapParse parse_asmap(std::string_view content) {
    const auto table = csv::parse(content);
    const auto c_prefix = require_column(table, "prefix", "asmap"), c_asn = require_column(table, "asn", "asmap");
    AsMapParse out;
    for (const auto& row : table.rows) {
        const auto prefix = IpPrefix::parse(field_at(row, c_prefix));
        const auto asn = parse_asn_field(field_at(row, c_asn));
        if (!prefix || !asn) {
            out.errors.push_back({row.line, !prefix ? "invalid prefix" : "invalid asn"});
            continue;
        }
        out.map.insert(*prefix, *asn);
    }
    return out;
}

OrgMapParse parse_as2org(std::string_view content) {
    const auto table = csv::parse(content);
    const auto c_asn = require_column(table, "asn", "as2org"), c_org = require_column(table, "org", "as2org");
    OrgMapParse out;
    for (const auto& row : table.rows) {
        const auto asn = parse_asn_field(field_at(row, c_asn));
        const auto org = field_at(row, c_org);
        if (!asn || org.empty()) {
            out.errors.push_back({row.line, !asn ? "invalid asn" : "empty org"});
            continue;
        }
        out.map.insert_or_assign(*asn, org);
    }
    return out;
}

ResolutionParse parse_resolutions(std::string_view content) {
    const auto table = csv::parse(content);
    const auto c_domain = require_column(table, "domain", "resolutions"),
               c_ip = require_column(table, "ip", "resolutions");
    ResolutionParse out;
    for (const auto& row : table.rows) {
        const auto d = DomainName::parse(field_at(row, c_domain));
        const auto ip = IpAddress::parse(field_at(row, c_ip));
        if (!d || !ip) {
            out.errors.push_back({row.line, !d ? "invalid domain" : "invalid ip"});
            continue;
        }
        out.map.insert_or_assign(*d, *ip);
    }
    return out;
}

std::string_view to_string(TrackerTier t) {
    switch (t) {
        case TrackerTier::EasyList: return "EasyList";
        case TrackerTier::HostsList: return "HostsList";
        case TrackerTier::Manual: return "Manual";
    }
    return "Manual";
}

std::unordered_set<std::string> parse_easylist(std::string_view content, std::size_t* ignored) {
    std::unordered_set<std::string> out;
    std::size_t skipped = 0;
    for (auto raw : text::lines(content)) {
        auto line = text::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '!' || line.front() == '[') continue;  // comments and header
        if (line.rfind("@@", 0) == 0 || line.find('#') != std::string_view::npos) {
            ++skipped;  // exceptions and element hiding
            continue;
        }
        std::optional<DomainName> domain;
        if (line.rfind("||", 0) == 0) {
            auto body = line.substr(2);
            const auto caret = body.find('^');
            if (caret == std::string_view::npos) {
                ++skipped;
                continue;
            }
            const auto after = body.substr(caret + 1);
            if (!after.empty() && after.front() != '$') {
                ++skipped;  // path rule
                continue;
            }
            domain = DomainName::parse(body.substr(0, caret));
        } else if (line.find_first_of("/*|^$") == std::string_view::npos && line.find('.') != std::string_view::npos) {
            domain = DomainName::parse(line);
        }
        if (domain && domain->fqdn().find('.') != std::string::npos) {
            out.insert(domain->fqdn());
        } else {
            ++skipped;
        }
    }
    if (ignored) *ignored = skipped;
    return out;
}

std::unordered_set<std::string> parse_hosts_list(std::string_view content, std::size_t* ignored) {
    std::unordered_set<std::string> out;
    std::size_t skipped = 0;
    for (auto raw : text::lines(content)) {
        auto line = text::trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        std::vector<std::string_view> words;
        for (auto w : text::split(line, ' ')) {
            for (auto t : text::split(w, '\t')) {
                if (!t.empty()) words.push_back(t);
            }
        }
        if (words.size() < 2 || (words[0] != "0.0.0.0" && words[0] != "127.0.0.1" && words[0] != "::")) {
            ++skipped;
            continue;
        }
        for (std::size_t i = 1; i < words.size(); ++i) {
            const auto d = DomainName::parse(words[i]);
            if (!d || d->fqdn() == "localhost" || d->fqdn() == "localhost.localdomain" ||
                d->fqdn().find('.') == std::string::npos) {
                ++skipped;
                continue;
            }
            out.insert(d->fqdn());
        }
    }
    if (ignored) *ignored = skipped;
    return out;
}

std::unordered_set<std::string> parse_manual_trackers(std::string_view content, std::size_t* ignored) {
    std::unordered_set<std::string> out;
    std::size_t skipped = 0;
    for (auto raw : text::lines(content)) {
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto end = line.find_first_of(" \t,#");
        const auto d = DomainName::parse(line.substr(0, end));
        if (d) {
            out.insert(d->fqdn());
        } else {
            ++skipped;
        }
    }
    if (ignored) *ignored = skipped;
    return out;
}

TrackerDb parse_tracker_lists(const std::string& easylist_path, const std::string& hosts_path,
                              const std::string& manual_path) {
    TrackerDb db;
    const std::array<const std::string*, 3> paths{&easylist_path, &hosts_path, &manual_path};
    for (std::size_t t = 0; t < 3; ++t) {
        if (paths[t]->empty()) continue;
        try {
            const auto content = text::read_file(*paths[t]);
            switch (t) {
                case 0: db.tiers[t] = parse_easylist(content, &db.ignored_lines[t]); break;
                case 1: db.tiers[t] = parse_hosts_list(content, &db.ignored_lines[t]); break;
                default: db.tiers[t] = parse_manual_trackers(content, &db.ignored_lines[t]); break;
            }
        } catch (const IoError& e) {
            db.tier_errors[t] = e.what();
        }
    }
    return db;
}

}  // namespace dlaudit
