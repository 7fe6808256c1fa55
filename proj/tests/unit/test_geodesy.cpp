#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/geometry.hpp>

#include "dlaudit/error.hpp"
#include "dlaudit/geodesy.hpp"
#include "support.hpp"

using namespace dlaudit;
using testsupport::cc;

namespace bg = boost::geometry;

namespace {

// Independent great-circle oracle: Boost.Geometry's haversine strategy on the same sphere.
double oracle_km(const GeoPoint& a, const GeoPoint& b) {
    using P = bg::model::point<double, 2, bg::cs::spherical_equatorial<bg::degree>>;
    return bg::distance(P(a.lon, a.lat), P(b.lon, b.lat), bg::strategy::distance::haversine<double>(kEarthRadiusKm));
}

}  // namespace

TEST_SUITE("geodesy") {

TEST_CASE("haversine examples") {
    const auto paris = GeoPoint::make(48.8566, 2.3522), ny = GeoPoint::make(40.7128, -74.0060);
    CHECK(std::abs(haversine_km(paris, ny) - 5837.0) <= 5.0);
    CHECK(haversine_km(GeoPoint::make(10, 20), GeoPoint::make(10, 20)) == 0.0);
    const double half = std::numbers::pi * kEarthRadiusKm;
    CHECK(std::abs(haversine_km(GeoPoint::make(0, 0), GeoPoint::make(0, 180)) - half) <= 1.0);
    CHECK(half == doctest::Approx(20015.1).epsilon(1e-5));
}

TEST_CASE("property: symmetry, bound and oracle agreement on random pairs") {
    testsupport::Rng rng(2022);
    for (int i = 0; i < 1000; ++i) {
        const auto a = rng.point(), b = rng.point();
        const double d = haversine_km(a, b);
        REQUIRE(d == haversine_km(b, a));
        REQUIRE(d <= 20015.1);
        REQUIRE(d >= 0.0);
        const double o = oracle_km(a, b);
        REQUIRE(std::abs(d - o) <= 1e-9 * std::max(o, 1e-9));
    }
}

TEST_CASE("implied speed") {
    CHECK(implied_speed(6000, 20) == doctest::Approx(600.0));
    CHECK(implied_speed(0, 5) == 0.0);
    CHECK(implied_speed(1332.4, 20) == doctest::Approx(133.24));
    CHECK_THROWS_AS(implied_speed(10, 0), NonPositiveRtt);
    CHECK_THROWS_AS(implied_speed(10, -1), NonPositiveRtt);
    CHECK_THROWS_AS(implied_speed(-1, 5), PreconditionError);
}

TEST_CASE("speed-of-light feasibility") {
    CHECK(SolConfig{}.max_speed_km_per_ms == doctest::Approx(133.2411));
    CHECK(sol_feasible(6000, 20) == SolVerdict::Infeasible);
    CHECK(sol_feasible(600, 20) == SolVerdict::Feasible);
    CHECK(sol_feasible(1332.4, 20) == SolVerdict::Feasible);
    CHECK(sol_feasible(500, 2) == SolVerdict::Infeasible);
    CHECK_THROWS_AS(SolConfig{0.0}.validate(), ConfigError);
    CHECK_THROWS_AS(SolConfig{400.0}.validate(), ConfigError);
}

TEST_CASE("property: feasibility is monotone in rtt") {
    testsupport::Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double d = rng.uniform(0.0, 20015.1);
        const double r1 = rng.uniform(0.01, 500.0);
        const double r2 = r1 + rng.uniform(0.0, 500.0);
        if (sol_feasible(d, r1) == SolVerdict::Feasible) REQUIRE(sol_feasible(d, r2) == SolVerdict::Feasible);
    }
}

TEST_CASE("regional gate thresholds") {
    const auto cfg = LatencyThresholdConfig::defaults();
    CHECK(cfg.threshold_ms(cc("US")) == doctest::Approx(58.5));
    CHECK(source_latency_gate(40, cc("US"), cfg) == GateVerdict::ExcludedTooClose);
    CHECK(source_latency_gate(58.5, cc("US"), cfg) == GateVerdict::Candidate);
    CHECK(source_latency_gate(12, cc("RU"), cfg) == GateVerdict::Candidate);
    CHECK(cfg.threshold_ms(cc("RU")) == doctest::Approx(11.7));
    CHECK(cfg.threshold_ms(cc("SG")) == doctest::Approx(95.4));
    CHECK(cfg.threshold_ms(cc("AE")) == doctest::Approx(70.2));
    CHECK(cfg.average_ms(cc("MX")) == doctest::Approx(113.0));
    CHECK(cfg.average_ms(cc("AR")) == doctest::Approx(166.0));
    CHECK_THROWS_AS(source_latency_gate(0, cc("US"), cfg), NonPositiveRtt);
    CHECK_THROWS_AS(cfg.average_ms(cc("AQ")), UnmappedDestination);
}

TEST_CASE("bundled thresholds file equals the built-in defaults") {
    const auto loaded = LatencyThresholdConfig::load((testsupport::data_dir() / "thresholds.json").string());
    CHECK(loaded == LatencyThresholdConfig::defaults());
    CHECK(LatencyThresholdConfig::parse_json(loaded.to_json()) == loaded);
}

TEST_CASE("threshold config validation") {
    auto cfg = LatencyThresholdConfig::defaults();
    cfg.fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LatencyThresholdConfig::defaults();
    cfg.region_avgs_ms["US"] = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LatencyThresholdConfig::defaults();
    cfg.country_to_region[cc("US")] = "Mars";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(LatencyThresholdConfig::parse_json("{\"fraction\": \"x\"}"), ConfigError);
}

TEST_CASE("property: gate is invariant under joint scaling") {
    testsupport::Rng rng(8);
    const auto base = LatencyThresholdConfig::defaults();
    const std::vector<CountryCode> dests = {cc("US"), cc("RU"), cc("TR"), cc("SG"), cc("AE"), cc("BR"), cc("AR")};
    for (int i = 0; i < 2000; ++i) {
        // Powers of two keep the scaled comparison exact.
        const double k = std::ldexp(1.0, static_cast<int>(rng.integer(-8, 8)));
        auto scaled = base;
        for (auto& [_, v] : scaled.region_avgs_ms) v *= k;
        for (auto& [_, v] : scaled.country_overrides_ms) v *= k;
        const auto c = rng.pick(dests);
        const double obs = rng.uniform(0.1, 300.0);
        REQUIRE(source_latency_gate(obs, c, base) == source_latency_gate(obs * k, c, scaled));
    }
}

}  // TEST_SUITE
