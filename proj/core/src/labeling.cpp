#include "dlaudit/labeling.hpp"

#include <cmath>
#include <map>
#include <set>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "text.hpp"

namespace dlaudit {

bool is_google_domain(const DomainName& d, const std::unordered_set<std::string>& extra) {
    const auto name = d.without_www();
    const auto& fqdn = name.fqdn();
    if (fqdn == "youtube.com" || fqdn == "news.google.com") return true;
    if (extra.contains(fqdn) || extra.contains(d.fqdn())) return true;

    const auto labels = name.labels();
    if (labels.empty() || labels.front() != "google") return false;
    const auto& tld = labels.back();
    if (!text::is_ascii_alpha(tld)) return false;
    if (labels.size() == 2) return true;
    return labels.size() == 3 && (labels[1] == "co" || labels[1] == "com");
}

std::vector<std::string> url_ladder(std::string_view domain) {
    if (text::trim(domain).empty()) throw PreconditionError("url_ladder: empty domain");
    const auto d = DomainName::parse(domain);
    if (!d) throw PreconditionError("url_ladder: invalid domain '" + std::string(domain) + "'");
    const auto bare = d->without_www().fqdn();
    return {"https://www." + bare, "http://www." + bare, "https://" + bare, "http://" + bare};
}

PartyLabel label_party(const DomainName& initial, const DomainName& linked, const ResolutionTable& resolution,
                       const AsMap& asmap, const OrgMap& orgmap) {
    const auto ip_of = [&](const DomainName& d) {
        const auto it = resolution.find(d);
        if (it == resolution.end()) throw UnresolvedDomain(d.fqdn());
        return it->second;
    };
    const auto a = asmap.lookup(ip_of(initial));
    const auto b = asmap.lookup(ip_of(linked));
    PartyLabel label;
    if (!a || !b) return label;
    if (*a == *b) {
        label.kind = PartyLabel::Kind::FirstParty;
        label.reason = FirstPartyReason::AsMatch;
        label.matched_asn = *a;
        return label;
    }
    const auto oa = orgmap.find(*a), ob = orgmap.find(*b);
    if (oa != orgmap.end() && ob != orgmap.end() && oa->second == ob->second) {
        label.kind = PartyLabel::Kind::FirstParty;
        label.reason = FirstPartyReason::OrgMatch;
        label.matched_org = oa->second;
    }
    return label;
}

std::optional<TrackerLabel> label_tracker(const DomainName& d, const TrackerDb& db) {
    const auto suffixes = d.suffixes_to_registrable();
    for (std::size_t t = 0; t < db.tiers.size(); ++t) {
        const auto& tier = db.tiers[t];
        if (tier.empty()) continue;
        for (const auto s : suffixes) {
            if (const auto it = tier.find(std::string(s)); it != tier.end()) {
                return TrackerLabel{d, static_cast<TrackerTier>(t), *it};
            }
        }
    }
    return std::nullopt;
}

std::string_view to_string(MatchKind k) {
    switch (k) {
        case MatchKind::Exact: return "exact";
        case MatchKind::Prefix: return "prefix";
        case MatchKind::Substring: return "substring";
    }
    return "exact";
}

bool CookieIdRule::matches(std::string_view name) const {
    switch (match_kind) {
        case MatchKind::Exact: return name == pattern;
        case MatchKind::Prefix: return name.substr(0, pattern.size()) == pattern;
        case MatchKind::Substring: return name.find(pattern) != std::string_view::npos;
    }
    return false;
}

const std::vector<CookieIdRule>& default_cookie_rules() {
    static const std::vector<CookieIdRule> rules = {
        {"_ga", MatchKind::Exact, "Google Analytics", "analytics"},
        {"_gid", MatchKind::Exact, "Google Analytics", "analytics"},
        {"__gfp_64b", MatchKind::Exact, "DoubleClick", "analytics and ad personalization"},
        {"_fbp", MatchKind::Exact, "Facebook", "advertising"},
        {"_pbjs_userid_consent_data", MatchKind::Exact, "Prebid", "consent"},
        {"OptanonConsent", MatchKind::Exact, "OneTrust", "consent"},
    };
    return rules;
}

std::vector<CookieIdRule> parse_cookie_rules(std::string_view content) {
    const auto table = csv::parse(content);
    const auto cp = table.column("pattern"), ck = table.column("match_kind"), co = table.column("org"),
               cu = table.column("purpose");
    if (!cp || !ck || !co || !cu) throw ConfigError("cookie rules: expected columns pattern,match_kind,org,purpose");
    std::vector<CookieIdRule> rules;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        const auto at = [&](std::size_t i) {
            return i < row.fields.size() ? std::string(text::trim(row.fields[i])) : std::string();
        };
        const auto where = "cookie rules line " + std::to_string(row.line);
        CookieIdRule r;
        r.pattern = at(*cp);
        if (r.pattern.empty()) throw ConfigError(where + ": empty pattern");
        const auto kind = text::to_lower(at(*ck));
        if (kind == "exact" || kind.empty()) {
            r.match_kind = MatchKind::Exact;
        } else if (kind == "prefix") {
            r.match_kind = MatchKind::Prefix;
        } else if (kind == "substring") {
            r.match_kind = MatchKind::Substring;
        } else {
            throw ConfigError(where + ": unknown match_kind '" + kind + "'");
        }
        r.org = at(*co);
        r.purpose = at(*cu);
        if (!seen.insert(r.pattern).second) throw ConfigError(where + ": duplicate pattern '" + r.pattern + "'");
        rules.push_back(std::move(r));
    }
    return rules;
}

std::vector<CookieIdRule> load_cookie_rules(const std::string& path) {
    return parse_cookie_rules(text::read_file(path));
}

std::optional<CookieClass> classify_cookie(const Cookie& c, const std::vector<CookieIdRule>& rules) {
    for (const auto& r : rules) {
        if (r.matches(c.name)) return CookieClass{r.org, r.purpose, r.pattern};
    }
    return std::nullopt;
}

double char_entropy(std::string_view s) {
    if (s.empty()) return 0.0;
    std::map<char, std::size_t> freq;
    for (const char ch : s) ++freq[ch];
    double h = 0.0;
    const auto n = static_cast<double>(s.size());
    for (const auto& [ch, k] : freq) {
        const double p = static_cast<double>(k) / n;
        h -= p * std::log2(p);
    }
    return h;
}

bool has_unique_identifier(std::string_view value, const EntropyHeuristic& h) {
    return value.size() >= h.min_length && char_entropy(value) >= h.min_bits_per_char;
}

std::string_view to_string(ProxyCheck p) {
    switch (p) {
        case ProxyCheck::FullMatch: return "full_match";
        case ProxyCheck::CountryMismatch: return "country_mismatch";
        case ProxyCheck::AsMismatch: return "as_mismatch";
        case ProxyCheck::BothMismatch: return "both_mismatch";
    }
    return "both_mismatch";
}

ProxyCheck proxy_crosscheck(const Ascp& claimed, const std::vector<Ascp>& observed) {
    if (observed.empty()) throw PreconditionError("proxy_crosscheck: no observed addresses");
    bool asn_ok = true, country_ok = true;
    for (const auto& o : observed) {
        asn_ok = asn_ok && o.asn == claimed.asn;
        country_ok = country_ok && o.country == claimed.country;
    }
    if (asn_ok && country_ok) return ProxyCheck::FullMatch;
    if (asn_ok) return ProxyCheck::CountryMismatch;
    if (country_ok) return ProxyCheck::AsMismatch;
    return ProxyCheck::BothMismatch;
}

}  // namespace dlaudit
