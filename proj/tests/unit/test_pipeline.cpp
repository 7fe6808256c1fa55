#include "doctest.h"

#include <algorithm>

#include "dlaudit/error.hpp"
#include "dlaudit/pipeline.hpp"
#include "random_funnel.hpp"
#include "support.hpp"

using namespace dlaudit;
using testsupport::cc;
using testsupport::dn;
using testsupport::hop;
using testsupport::ip;
using testsupport::simple_trace;
using testsupport::trace;

namespace {

const Date kAudit = Date::parse("2022-09-15");

AdequacyLedger ledger() {
    return AdequacyLedger::load_csv((testsupport::data_dir() / "adequacy_ledger.csv").string(), kAudit);
}

ServerCandidate candidate(const char* addr) {
    return ServerCandidate{.ip = ip(addr)};
}

TracerouteRecord dest_trace(const std::string& id, const std::string& dst, std::uint32_t asn, GeoPoint probe,
                            double rtt, Timestamp at = Timestamp{}) {
    // The gateway hop is subtracted, so the effective latency is rtt - 0.5.
    auto t = trace(id, dst, {hop(1, {{"10.0.0.1", 0.5}}), hop(2, {{dst, rtt}})}, StageTag::DestinationBased,
                   Ascp::make(asn, cc("DE")));
    t.probe_point = probe;
    t.timestamp = at;
    return t;
}

// Point `km` kilometres due north of `p` along a meridian.
GeoPoint north_of(GeoPoint p, double km) {
    return GeoPoint::make(p.lat + km / kEarthRadiusKm * 180.0 / 3.14159265358979323846, p.lon);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("candidate set merges duplicates and sorts") {
    auto a = candidate("10.0.0.9");
    a.initial_sites.insert(dn("a.example"));
    auto b = candidate("10.0.0.2");
    auto c = candidate("10.0.0.9");
    c.initial_sites.insert(dn("b.example"));
    c.hostname = dn("host.example");
    CandidateSet set({a, b, c});
    REQUIRE(set.size() == 2);
    CHECK(set.items()[0].ip == ip("10.0.0.2"));
    const auto* merged = set.find(ip("10.0.0.9"));
    REQUIRE(merged);
    CHECK(merged->initial_sites.size() == 2);
    CHECK(merged->hostname == dn("host.example"));
    CHECK_FALSE(set.find(ip("10.0.0.1")));
}

TEST_CASE("geodb stage splits unknown, adequate and non-adequate") {
    CandidateSet set({candidate("192.0.2.1"), candidate("192.0.2.2"), candidate("192.0.2.3")});
    GeoDb geo;
    geo.emplace(ip("192.0.2.1"), GeoRecord::make(ip("192.0.2.1"), cc("US"), std::nullopt, Granularity::Country));
    geo.emplace(ip("192.0.2.2"), GeoRecord::make(ip("192.0.2.2"), cc("DE"), std::nullopt, Granularity::Country));
    const auto s = stage_geodb(set, geo, ledger(), kAudit);
    CHECK(s.input == 3);
    CHECK(s.unknown_country == 1);
    CHECK(s.adequate == 1);
    CHECK(s.kept == 1);
    CHECK(s.kept_ips == std::set<IpAddress>{ip("192.0.2.1")});
    CHECK(set.find(ip("192.0.2.3"))->stage_trace.back().verdict == "unknown_country");
}

TEST_CASE("source stage applies the regional gate") {
    CandidateSet set({candidate("192.0.2.1"), candidate("192.0.2.2")});
    GeoDb geo;
    for (const char* a : {"192.0.2.1", "192.0.2.2"}) {
        geo.emplace(ip(a), GeoRecord::make(ip(a), cc("US"), std::nullopt, Granularity::Country));
    }
    const auto g = stage_geodb(set, geo, ledger(), kAudit);
    const std::vector<TracerouteRecord> traces = {
        simple_trace("t1", "192.0.2.1", 2.0, 90.0),     // 88 ms: passes 58.5
        simple_trace("t2", "192.0.2.1", 2.0, 20.0),     // too close
        simple_trace("t3", "192.0.2.2", 2.0, 30.0),     // too close
        simple_trace("t4", "192.0.2.2", 50.0, 40.0),    // first > last
        simple_trace("t5", "192.0.2.2", 2.0, std::nullopt),
        simple_trace("t6", "203.0.113.1", 2.0, 90.0)};  // not a geodb survivor
    const auto s = stage_source(set, g.kept_ips, traces, LatencyThresholdConfig::defaults());
    CHECK(s.input == 5);
    CHECK(s.untargeted == 1);
    CHECK(s.passed == 1);
    CHECK(s.below_gate == 2);
    CHECK(s.first_exceeds_last == 1);
    CHECK(s.unresponsive == 1);
    CHECK(s.excluded_unresponsive() == 2);
    CHECK(s.survivors == std::set<IpAddress>{ip("192.0.2.1")});

    auto wrong = traces;
    wrong[0].stage_tag = StageTag::DestinationBased;
    CHECK_THROWS_AS(stage_source(set, g.kept_ips, wrong, LatencyThresholdConfig::defaults()), PreconditionError);
}

TEST_CASE("destination stage: speed of light, granularity and duplicates") {
    const auto probe = GeoPoint::make(50.11, 8.68);
    const auto far = north_of(probe, 500.0);
    CHECK(haversine_km(probe, far) == doctest::Approx(500.0).epsilon(1e-9));

    CandidateSet set({candidate("192.0.2.1"), candidate("192.0.2.2"), candidate("192.0.2.3")});
    GeoDb geo;
    geo.emplace(ip("192.0.2.1"), GeoRecord::make(ip("192.0.2.1"), cc("US"), far, Granularity::City));
    geo.emplace(ip("192.0.2.2"), GeoRecord::make(ip("192.0.2.2"), cc("US"), far, Granularity::City));
    geo.emplace(ip("192.0.2.3"), GeoRecord::make(ip("192.0.2.3"), cc("US"), std::nullopt, Granularity::Country));
    const std::set<IpAddress> survivors = {ip("192.0.2.1"), ip("192.0.2.2"), ip("192.0.2.3")};
    const auto t0 = std::chrono::sys_days(std::chrono::year{2022} / 9 / 1);
    const std::vector<TracerouteRecord> traces = {
        dest_trace("d1", "192.0.2.1", 100, probe, 2.0),    // 500 km in 2 ms: impossible
        dest_trace("d2", "192.0.2.2", 100, probe, 9.0, Timestamp(t0 + std::chrono::hours(1))),
        dest_trace("d3", "192.0.2.2", 100, probe, 2.0, Timestamp(t0)),  // earlier duplicate wins
        dest_trace("d4", "192.0.2.2", 200, probe, 9.0),
        dest_trace("d5", "192.0.2.3", 100, probe, 50.0),   // no city point
        dest_trace("d6", "198.51.100.1", 100, probe, 9.0)};
    const auto d = stage_destination(set, survivors, traces, geo, SolConfig{});
    CHECK(d.untargeted == 1);
    CHECK(d.duplicates == 1);
    REQUIRE(d.measurements.size() == 4);
    CHECK(d.input == 4);
    CHECK(d.sol_infeasible == 2);
    CHECK(d.passed == 1);
    CHECK(d.granularity == 1);
    CHECK(d.not_measured == 0);
    const auto dup = std::find_if(d.measurements.begin(), d.measurements.end(), [](const Measurement& m) {
        return m.ip == ip("192.0.2.2") && m.asn == 100;
    });
    REQUIRE(dup != d.measurements.end());
    CHECK(traces[dup->trace_index].measurement_id == "d3");
    CHECK(dup->verdict == DestVerdict::SolInfeasible);
    CHECK(*dup->distance_km == doctest::Approx(500.0));
}

TEST_CASE("rDNS stage and final sample instances") {
    const auto probe = GeoPoint::make(40.0, -75.0);
    CandidateSet set({candidate("192.0.2.1"), candidate("192.0.2.2")});
    GeoDb geo;
    for (const char* a : {"192.0.2.1", "192.0.2.2"}) {
        geo.emplace(ip(a), GeoRecord::make(ip(a), cc("US"), probe, Granularity::City));
    }
    stage_geodb(set, geo, ledger(), kAudit);
    const std::set<IpAddress> survivors = {ip("192.0.2.1"), ip("192.0.2.2")};
    std::vector<TracerouteRecord> traces;
    for (std::uint32_t asn : {100u, 200u}) {
        traces.push_back(dest_trace("a" + std::to_string(asn), "192.0.2.1", asn, probe, 3.0));
        traces.push_back(dest_trace("b" + std::to_string(asn), "192.0.2.2", asn, probe, 3.0));
    }
    auto d = stage_destination(set, survivors, traces, geo, SolConfig{});
    REQUIRE(d.passed == 4);

    RdnsTable rdns;
    rdns.emplace(ip("192.0.2.2"), dn("ae1.ca-central-1.example.net"));
    const auto geohints = GeohintDb::load_dir((testsupport::data_dir() / "geohints").string());
    const auto r = stage_rdns(set, d, rdns, geohints, ledger(), kAudit);
    CHECK(r.input == 4);
    CHECK(r.breakdown.no_hostname == 2);
    CHECK(r.breakdown.indicates_adequate == 2);
    CHECK(r.kept == 2);

    // Two sites crawled from three vantages, each loading a domain on the surviving IP.
    std::vector<CrawlLog> crawls;
    for (std::uint32_t asn : {1u, 2u, 3u}) {
        for (const char* site : {"alpha.example", "beta.example"}) {
            CrawlLog c{Ascp::make(asn, cc("FR")), std::string("https://") + site, dn(site),
                       {dn("cdn.tracker.example"), dn("other.example")}, {}, FetchStatus::Ok, 1};
            crawls.push_back(c);
        }
    }
    crawls.push_back(CrawlLog{Ascp::make(4, cc("FR")), "https://gamma.example", dn("gamma.example"),
                              {dn("cdn.tracker.example")}, {}, FetchStatus::Failed, 4});
    ResolutionTable res;
    res.emplace(dn("cdn.tracker.example"), ip("192.0.2.1"));
    res.emplace(dn("other.example"), ip("192.0.2.2"));
    const Resolver resolver(res, {});
    const auto f = final_sample(d, crawls, resolver);
    CHECK(f.unique_ips() == 1);
    CHECK(f.measurements() == 2);
    CHECK(f.instances.size() == 6);
    CHECK(std::is_sorted(f.instances.begin(), f.instances.end()));
}

TEST_CASE("resolver prefers per-vantage traceroute resolutions") {
    ResolutionTable global;
    global.emplace(dn("site.example"), ip("192.0.2.1"));
    auto t = simple_trace("s", "198.51.100.5", 1.0, 60.0);
    t.target = dn("site.example");
    const Resolver r(global, {t});
    CHECK(r.resolve(t.source, dn("site.example")) == ip("198.51.100.5"));
    CHECK(r.resolve(Ascp::make(9, cc("FR")), dn("site.example")) == ip("192.0.2.1"));
    CHECK_FALSE(r.resolve(t.source, dn("none.example")));
}

TEST_CASE("property: random funnels conserve counts, shrink monotonically and are deterministic") {
    const auto l = ledger();
    const auto geohints = GeohintDb::load_dir((testsupport::data_dir() / "geohints").string());
    for (std::uint64_t seed : {2024u, 7u, 99u}) {
        const auto f = testsupport::random_funnel(seed, 10000);
        const auto a = testsupport::run_stages(f, l, geohints, kAudit, 1);
        const auto b = testsupport::run_stages(f, l, geohints, kAudit, 4);
        CHECK(testsupport::funnel_conserved(f, a));
        CHECK(testsupport::same_outcome(a, b));
        // The random inputs exercise every exit of every stage.
        CHECK(a.geodb.unknown_country > 0);
        CHECK(a.geodb.adequate > 0);
        CHECK(a.source.unresponsive > 0);
        CHECK(a.source.first_exceeds_last > 0);
        CHECK(a.source.below_gate > 0);
        CHECK(a.destination.sol_infeasible > 0);
        CHECK(a.destination.granularity > 0);
        CHECK(a.destination.duplicates > 0);
        CHECK(a.rdns.breakdown.indicates_adequate > 0);
        CHECK(a.rdns.kept > 0);
    }
}

TEST_CASE("validation metrics") {
    ValidationMetrics m{170, 0, 0, 30, {}, {}, {}};
    m.finalize();
    CHECK(*m.tpr == doctest::Approx(0.85));
    CHECK(*m.fnr == doctest::Approx(0.15));
    CHECK(*m.precision == doctest::Approx(1.0));
    ValidationMetrics neg{0, 0, 1000, 0, {}, {}, {}};
    neg.finalize();
    CHECK_FALSE(neg.precision);
    CHECK_FALSE(neg.tpr);
    neg += m;
    CHECK(neg.total() == 1200);
    CHECK(*neg.precision == doctest::Approx(1.0));
    CHECK(parse_truth_csv("ip,source_country,true_country\n192.0.2.1,DE,US\n").size() == 1);
    CHECK_THROWS_AS(parse_truth_csv("ip,source_country,true_country\n192.0.2.1,DE\n"), ConfigError);
    CHECK_THROWS_AS(parse_truth_csv("ip,source_country,true_country\nnope,DE,US\n"), ConfigError);
}

}  // TEST_SUITE
