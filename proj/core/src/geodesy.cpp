#include "dlaudit/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "dlaudit/error.hpp"
#include "text.hpp"

namespace dlaudit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct RegionMembers {
    const char* region;
    const char* countries;
};

// Default destination-country groupings for the threshold regions.
constexpr RegionMembers kDefaultRegions[] = {
    {"Europe",
     "AD AL AT AX BA BE BG BY CH CY CZ DE DK EE ES FI FO FR GB GG GI GR HR HU IE IM IS IT JE LI LT LU LV MC MD ME "
     "MK MT NL NO PL PT RO RS RU SE SI SJ SK SM TR UA VA XK"},
    {"US", "BM CA GL PM US"},
    {"EMEA",
     "AE AM AO AZ BF BH BI BJ BW CD CF CG CI CM CV DJ DZ EG EH ER ET GA GE GH GM GN GQ GW IL IQ IR JO KE KM KW LB "
     "LR LS LY MA MG ML MR MU MW MZ NA NE NG OM PS QA RE RW SA SC SD SH SL SN SO SS ST SY SZ TD TG TN TZ UG YE YT "
     "ZA ZM ZW"},
    {"AsiaPacific",
     "AF AS AU BD BN BT CC CK CN CX FJ FM GU HK ID IN IO JP KG KH KI KP KR KZ LA LK MH MM MN MO MP MV MY NC NF NP "
     "NR NU NZ PF PG PH PK PW SB SG TH TJ TK TL TM TO TV TW UZ VN VU WF WS"},
};

constexpr const char* kLatamFast = "BR MX";
constexpr const char* kLatamSlow =
    "AG AI AR AW BB BL BO BQ BS BZ CL CO CR CU CW DM DO EC FK GD GF GP GS GT GY HN HT JM KN KY LC MF MQ MS NI PA "
    "PE PR PY SR SV SX TC TT UY VC VE VG VI";

std::vector<CountryCode> codes(std::string_view list) {
    std::vector<CountryCode> out;
    for (auto t : text::split(list, ' ')) {
        if (!t.empty()) out.push_back(CountryCode::from(t));
    }
    return out;
}

CountryCode config_country(const std::string& key) {
    const auto c = normalize_country(key);
    if (!c) throw ConfigError("thresholds: unknown country '" + key + "'");
    return *c;
}

double positive_number(const nlohmann::json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError("thresholds: " + what + " must be a number");
    return v.get<double>();
}

}  // namespace

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = a.lat * kDegToRad, phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlambda = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

double implied_speed(double distance_km, double rtt_ms) {
    if (!(rtt_ms > 0.0)) throw NonPositiveRtt(rtt_ms);
    if (!(distance_km >= 0.0)) throw PreconditionError("distance must be non-negative");
    return 2.0 * distance_km / rtt_ms;
}

void SolConfig::validate() const {
    if (!(max_speed_km_per_ms > 0.0 && max_speed_km_per_ms <= kSpeedOfLightKmPerMs)) {
        throw ConfigError("max_speed_km_per_ms must be in (0, c]");
    }
}

std::string_view to_string(SolVerdict v) { return v == SolVerdict::Feasible ? "feasible" : "infeasible"; }

SolVerdict sol_feasible(double distance_km, double rtt_ms, const SolConfig& cfg) {
    return implied_speed(distance_km, rtt_ms) > cfg.max_speed_km_per_ms ? SolVerdict::Infeasible
                                                                        : SolVerdict::Feasible;
}

LatencyThresholdConfig LatencyThresholdConfig::defaults() {
    LatencyThresholdConfig cfg;
    cfg.region_avgs_ms = {{"Europe", 13.0}, {"US", 65.0}, {"EMEA", 78.0}, {"AsiaPacific", 106.0}};
    for (const auto& r : kDefaultRegions) {
        for (const auto& c : codes(r.countries)) cfg.country_to_region.emplace(c, r.region);
    }
    for (const auto& c : codes(kLatamFast)) cfg.country_overrides_ms.emplace(c, 113.0);
    for (const auto& c : codes(kLatamSlow)) cfg.country_overrides_ms.emplace(c, 166.0);
    return cfg;
}

LatencyThresholdConfig LatencyThresholdConfig::parse_json(std::string_view content) {
    const auto doc = nlohmann::json::parse(content, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError("thresholds: not a JSON object");
    LatencyThresholdConfig cfg;
    if (const auto it = doc.find("fraction"); it != doc.end()) cfg.fraction = positive_number(*it, "fraction");
    const auto section = [&](const char* name) -> const nlohmann::json* {
        const auto it = doc.find(name);
        if (it == doc.end()) return nullptr;
        if (!it->is_object()) throw ConfigError(std::string("thresholds: [") + name + "] must be a table");
        return &*it;
    };
    if (const auto* avgs = section("averages")) {
        for (const auto& [k, v] : avgs->items()) cfg.region_avgs_ms[k] = positive_number(v, "averages." + k);
    }
    if (const auto* map = section("country_region")) {
        for (const auto& [k, v] : map->items()) {
            if (!v.is_string()) throw ConfigError("thresholds: country_region." + k + " must be a region name");
            cfg.country_to_region[config_country(k)] = v.get<std::string>();
        }
    }
    if (const auto* latam = section("latam_overrides")) {
        for (const auto& [k, v] : latam->items()) {
            cfg.country_overrides_ms[config_country(k)] = positive_number(v, "latam_overrides." + k);
        }
    }
    cfg.validate();
    return cfg;
}

LatencyThresholdConfig LatencyThresholdConfig::load(const std::string& path) {
    return parse_json(text::read_file(path));
}

std::string LatencyThresholdConfig::to_json() const {
    nlohmann::ordered_json j;
    j["fraction"] = fraction;
    j["averages"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : region_avgs_ms) j["averages"][k] = v;
    j["country_region"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : country_to_region) j["country_region"][k.to_string()] = v;
    j["latam_overrides"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : country_overrides_ms) j["latam_overrides"][k.to_string()] = v;
    return j.dump(2) + "\n";
}

void LatencyThresholdConfig::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("thresholds: fraction must be in (0, 1]");
    for (const auto& [region, avg] : region_avgs_ms) {
        if (!(avg > 0.0)) throw ConfigError("thresholds: average for " + region + " must be positive");
    }
    for (const auto& [country, avg] : country_overrides_ms) {
        if (!(avg > 0.0)) throw ConfigError("thresholds: override for " + country.to_string() + " must be positive");
    }
    for (const auto& [country, region] : country_to_region) {
        if (!region_avgs_ms.contains(region)) {
            throw ConfigError("thresholds: " + country.to_string() + " maps to undefined region '" + region + "'");
        }
    }
}

double LatencyThresholdConfig::average_ms(const CountryCode& country) const {
    if (const auto it = country_overrides_ms.find(country); it != country_overrides_ms.end()) return it->second;
    if (const auto it = country_to_region.find(country); it != country_to_region.end()) {
        if (const auto avg = region_avgs_ms.find(it->second); avg != region_avgs_ms.end()) return avg->second;
    }
    throw UnmappedDestination(country.to_string());
}

std::string_view to_string(GateVerdict v) { return v == GateVerdict::Candidate ? "candidate" : "too_close"; }

GateVerdict source_latency_gate(double observed_ms, const CountryCode& dest_country,
                                const LatencyThresholdConfig& cfg) {
    if (!(observed_ms > 0.0)) throw NonPositiveRtt(observed_ms);
    return observed_ms >= cfg.threshold_ms(dest_country) ? GateVerdict::Candidate : GateVerdict::ExcludedTooClose;
}

}  // namespace dlaudit
