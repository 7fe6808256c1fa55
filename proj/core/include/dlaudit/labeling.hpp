#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dlaudit/ingest.hpp"
#include "dlaudit/model.hpp"

namespace dlaudit {

/// google.<tld>, google.co.<tld>, google.com.<tld>, youtube.com, news.google.com,
/// or any name in `extra` (a leading "www." is ignored).
bool is_google_domain(const DomainName& d, const std::unordered_set<std::string>& extra = {});

/// [https://www.d, http://www.d, https://d, http://d]. An existing "www." is
/// not doubled. Throws PreconditionError on an empty or invalid domain.
std::vector<std::string> url_ladder(std::string_view domain);

enum class FirstPartyReason { AsMatch, OrgMatch };

struct PartyLabel {
    enum class Kind { FirstParty, ThirdParty };
    Kind kind = Kind::ThirdParty;
    std::optional<FirstPartyReason> reason;
    std::optional<std::uint32_t> matched_asn;  // AsMatch
    std::optional<std::string> matched_org;    // OrgMatch

    [[nodiscard]] bool first_party() const { return kind == Kind::FirstParty; }
    friend bool operator==(const PartyLabel&, const PartyLabel&) = default;
};

/// First party when both domains resolve into the same AS, or into ASes of the
/// same organization. Throws UnresolvedDomain when either domain is missing
/// from `resolution`; an IP without an AS entry yields ThirdParty.
PartyLabel label_party(const DomainName& initial, const DomainName& linked, const ResolutionTable& resolution,
                       const AsMap& asmap, const OrgMap& orgmap);

struct TrackerLabel {
    DomainName domain;
    TrackerTier tier;
    std::string matched;  // list entry that matched

    friend bool operator==(const TrackerLabel&, const TrackerLabel&) = default;
};

/// Tests every suffix of `d` down to its registrable domain against the tiers
/// in cascade order; the first tier with a hit wins.
std::optional<TrackerLabel> label_tracker(const DomainName& d, const TrackerDb& db);

enum class MatchKind { Exact, Prefix, Substring };

std::string_view to_string(MatchKind k);

struct CookieIdRule {
    std::string pattern;
    MatchKind match_kind = MatchKind::Exact;
    std::string org;
    std::string purpose;

    [[nodiscard]] bool matches(std::string_view cookie_name) const;
};

/// Bundled identifier rules: _ga, _gid, __gfp_64b, _fbp, _pbjs_userid_consent_data, OptanonConsent.
const std::vector<CookieIdRule>& default_cookie_rules();
/// CSV `pattern,match_kind,org,purpose`. Throws ConfigError on duplicate patterns.
std::vector<CookieIdRule> parse_cookie_rules(std::string_view content);
std::vector<CookieIdRule> load_cookie_rules(const std::string& path);

struct CookieClass {
    std::string org;
    std::string purpose;
    std::string matched_pattern;

    friend bool operator==(const CookieClass&, const CookieClass&) = default;
};

/// The first rule matching the cookie name.
std::optional<CookieClass> classify_cookie(const Cookie& c, const std::vector<CookieIdRule>& rules);

struct EntropyHeuristic {
    std::size_t min_length = 16;
    double min_bits_per_char = 3.0;
};

/// Shannon entropy of the character distribution of `s`, in bits per character.
double char_entropy(std::string_view s);

/// Value looks like a unique identifier: long enough and high-entropy.
bool has_unique_identifier(std::string_view value, const EntropyHeuristic& h = {});

enum class ProxyCheck { FullMatch, CountryMismatch, AsMismatch, BothMismatch };

std::string_view to_string(ProxyCheck p);

/// Compares the claimed vantage with the Ascp of every IP in the observed /24.
/// Throws PreconditionError when `observed` is empty.
ProxyCheck proxy_crosscheck(const Ascp& claimed, const std::vector<Ascp>& observed);

}  // namespace dlaudit
