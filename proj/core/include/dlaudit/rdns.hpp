#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dlaudit/adequacy.hpp"
#include "dlaudit/country.hpp"
#include "dlaudit/model.hpp"

namespace dlaudit {

/// Lookup tables for country hints embedded in rDNS hostnames. Keys are lowercase.
struct GeohintDb {
    std::unordered_map<std::string, CountryCode> iata;
    std::unordered_map<std::string, CountryCode> cloud_regions;
    std::unordered_map<std::string, CountryCode> country_tokens;
    /// (hostname glob, country or nullopt for "no hint"); first match wins.
    std::vector<std::pair<std::string, std::optional<CountryCode>>> overrides;
    /// 3-letter tokens never treated as airport codes.
    std::unordered_set<std::string> iata_stoplist;

    /// Reads iata.csv, cloud_regions.csv, country_tokens.csv and overrides.csv
    /// (plus optional iata_stoplist.txt) from `dir`. Missing override and
    /// stoplist files are treated as empty; the others are required.
    static GeohintDb load_dir(const std::string& dir);
};

enum class HintSource { Override, CloudRegion, Iata, CountryToken };

std::string_view to_string(HintSource s);

struct Geohint {
    enum class Kind { Hint, NoHostname, NoGeohint };
    Kind kind = Kind::NoGeohint;
    std::optional<CountryCode> country;  // present iff kind == Hint
    HintSource source = HintSource::Override;
    std::string matched;  // token, region or glob that produced the hint

    friend bool operator==(const Geohint&, const Geohint&) = default;
};

/// Precedence: overrides > cloud regions (longest substring) > IATA tokens >
/// country tokens. Within a tier the leftmost match wins. Only labels left of
/// the registrable domain are tokenized for IATA and country tokens.
Geohint extract_geohint(const std::optional<DomainName>& hostname, const GeohintDb& db);

enum class RdnsOutcome { ConfirmsCountry, ReassignsTo, IndicatesAdequate, NoHostname, NoGeohint };

std::string_view to_string(RdnsOutcome o);

struct RdnsVerdict {
    RdnsOutcome outcome = RdnsOutcome::NoGeohint;
    CountryCode country;  // resulting country: hint for Reassigns/IndicatesAdequate, else the candidate

    [[nodiscard]] bool kept() const { return outcome != RdnsOutcome::IndicatesAdequate; }
};

RdnsVerdict rdns_stage(const CountryCode& candidate_country, const Geohint& hint, const AdequacyLedger& ledger,
                       Date date);

}  // namespace dlaudit
