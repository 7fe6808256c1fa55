#include "dlaudit/rdns.hpp"

#include <filesystem>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "text.hpp"

namespace dlaudit {

namespace {

std::unordered_map<std::string, CountryCode> load_map(const std::filesystem::path& path, std::string_view key_col) {
    const auto table = csv::parse(text::read_file(path.string()));
    const auto k = table.column(key_col), c = table.column("country");
    if (!k || !c) throw ConfigError(path.string() + ": expected columns " + std::string(key_col) + ",country");
    std::unordered_map<std::string, CountryCode> out;
    for (const auto& row : table.rows) {
        if (row.fields.size() <= std::max(*k, *c)) {
            throw ConfigError(path.string() + ":" + std::to_string(row.line) + ": short row");
        }
        const auto key = text::to_lower(text::trim(row.fields[*k]));
        const auto country = normalize_country(text::trim(row.fields[*c]));
        if (key.empty() || !country) {
            throw ConfigError(path.string() + ":" + std::to_string(row.line) + ": invalid entry");
        }
        out.insert_or_assign(key, *country);
    }
    return out;
}

bool is_iata_token(std::string_view t) {
    if (t.size() < 3 || !text::is_ascii_alpha(t.substr(0, 3))) return false;
    return t.size() == 3 || text::is_ascii_digits(t.substr(3));
}

std::vector<std::string_view> hint_tokens(const DomainName& host) {
    const std::string_view fqdn = host.fqdn();
    const auto reg = host.tld_plus_one();
    const auto prefix_len = fqdn.size() - reg.size();
    std::vector<std::string_view> out;
    if (prefix_len == 0) return out;
    const auto prefix = fqdn.substr(0, prefix_len);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= prefix.size(); ++i) {
        if (i == prefix.size() || prefix[i] == '.' || prefix[i] == '-' || prefix[i] == '_') {
            if (i > start) out.push_back(prefix.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

Geohint hint(CountryCode c, HintSource s, std::string matched) {
    return Geohint{Geohint::Kind::Hint, c, s, std::move(matched)};
}

}  // namespace

GeohintDb GeohintDb::load_dir(const std::string& dir) {
    const std::filesystem::path base(dir);
    GeohintDb db;
    db.iata = load_map(base / "iata.csv", "code");
    db.cloud_regions = load_map(base / "cloud_regions.csv", "region");
    db.country_tokens = load_map(base / "country_tokens.csv", "token");

    if (const auto p = base / "overrides.csv"; std::filesystem::exists(p)) {
        const auto table = csv::parse(text::read_file(p.string()));
        const auto g = table.column("hostname_glob"), c = table.column("country_or_NONE");
        if (!g || !c) throw ConfigError(p.string() + ": expected columns hostname_glob,country_or_NONE");
        for (const auto& row : table.rows) {
            if (row.fields.size() <= std::max(*g, *c)) {
                throw ConfigError(p.string() + ":" + std::to_string(row.line) + ": short row");
            }
            const auto glob = text::to_lower(text::trim(row.fields[*g]));
            const auto value = text::trim(row.fields[*c]);
            std::optional<CountryCode> country;
            if (value != "NONE") {
                country = normalize_country(value);
                if (!country) throw ConfigError(p.string() + ":" + std::to_string(row.line) + ": invalid country");
            }
            db.overrides.emplace_back(glob, country);
        }
    }
    if (const auto p = base / "iata_stoplist.txt"; std::filesystem::exists(p)) {
        const auto content = text::read_file(p.string());
        for (auto line : text::lines(content)) {
            line = text::trim(line);
            if (!line.empty() && line.front() != '#') db.iata_stoplist.insert(text::to_lower(line));
        }
    }
    return db;
}

std::string_view to_string(HintSource s) {
    switch (s) {
        case HintSource::Override: return "override";
        case HintSource::CloudRegion: return "cloud_region";
        case HintSource::Iata: return "iata";
        case HintSource::CountryToken: return "country_token";
    }
    return "override";
}

Geohint extract_geohint(const std::optional<DomainName>& hostname, const GeohintDb& db) {
    if (!hostname) return Geohint{Geohint::Kind::NoHostname, std::nullopt, HintSource::Override, {}};
    const std::string& fqdn = hostname->fqdn();

    for (const auto& [glob, country] : db.overrides) {
        if (!text::glob_match(glob, fqdn)) continue;
        if (country) return hint(*country, HintSource::Override, glob);
        return Geohint{Geohint::Kind::NoGeohint, std::nullopt, HintSource::Override, glob};
    }

    const std::string* best = nullptr;
    std::size_t best_pos = 0;
    for (const auto& [region, country] : db.cloud_regions) {
        const auto pos = fqdn.find(region);
        if (pos == std::string::npos) continue;
        if (!best || region.size() > best->size() || (region.size() == best->size() && pos < best_pos) ||
            (region.size() == best->size() && pos == best_pos && region < *best)) {
            best = &region;
            best_pos = pos;
        }
    }
    if (best) return hint(db.cloud_regions.at(*best), HintSource::CloudRegion, *best);

    const auto tokens = hint_tokens(*hostname);
    for (const auto t : tokens) {
        if (!is_iata_token(t)) continue;
        const std::string code(t.substr(0, 3));
        if (db.iata_stoplist.contains(code)) continue;
        if (const auto it = db.iata.find(code); it != db.iata.end()) return hint(it->second, HintSource::Iata, code);
    }
    for (const auto t : tokens) {
        if (const auto it = db.country_tokens.find(std::string(t)); it != db.country_tokens.end()) {
            return hint(it->second, HintSource::CountryToken, std::string(t));
        }
    }
    return Geohint{Geohint::Kind::NoGeohint, std::nullopt, HintSource::Override, {}};
}

std::string_view to_string(RdnsOutcome o) {
    switch (o) {
        case RdnsOutcome::ConfirmsCountry: return "confirms";
        case RdnsOutcome::ReassignsTo: return "reassigns";
        case RdnsOutcome::IndicatesAdequate: return "adequate";
        case RdnsOutcome::NoHostname: return "no_hostname";
        case RdnsOutcome::NoGeohint: return "no_geohint";
    }
    return "no_geohint";
}

RdnsVerdict rdns_stage(const CountryCode& candidate_country, const Geohint& h, const AdequacyLedger& ledger,
                       Date date) {
    switch (h.kind) {
        case Geohint::Kind::NoHostname: return {RdnsOutcome::NoHostname, candidate_country};
        case Geohint::Kind::NoGeohint: return {RdnsOutcome::NoGeohint, candidate_country};
        case Geohint::Kind::Hint: break;
    }
    const auto hinted = *h.country;
    if (is_adequate(hinted, ledger, date) == Adequacy::Adequate) return {RdnsOutcome::IndicatesAdequate, hinted};
    if (hinted == candidate_country) return {RdnsOutcome::ConfirmsCountry, candidate_country};
    return {RdnsOutcome::ReassignsTo, hinted};
}

}  // namespace dlaudit
