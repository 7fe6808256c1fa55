#include "dlaudit/adequacy.hpp"

#include <algorithm>
#include <map>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "text.hpp"

namespace dlaudit {

std::string_view to_string(AdequacyStatus s) {
    switch (s) {
        case AdequacyStatus::EUMember: return "EUMember";
        case AdequacyStatus::EEA: return "EEA";
        case AdequacyStatus::AdequateThirdCountry: return "AdequateThirdCountry";
    }
    return "AdequateThirdCountry";
}

std::optional<AdequacyStatus> parse_adequacy_status(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "eumember" || v == "eu") return AdequacyStatus::EUMember;
    if (v == "eea") return AdequacyStatus::EEA;
    if (v == "adequatethirdcountry" || v == "adequate") return AdequacyStatus::AdequateThirdCountry;
    return std::nullopt;
}

std::string_view to_string(Adequacy a) { return a == Adequacy::Adequate ? "Adequate" : "NonAdequate"; }

bool AdequacyDecision::active_on(Date d) const {
    return effective_from <= d && (!effective_until || d < *effective_until);
}

AdequacyLedger::AdequacyLedger(std::vector<AdequacyDecision> decisions, Date audit_date)
    : decisions_(std::move(decisions)), audit_date_(audit_date) {
    std::map<CountryCode, std::vector<const AdequacyDecision*>> by_country;
    for (const auto& d : decisions_) {
        if (d.effective_until && !(d.effective_from < *d.effective_until)) {
            throw ConfigError("adequacy decision for " + d.country.to_string() +
                              ": effective_from must precede effective_until");
        }
        by_country[d.country].push_back(&d);
    }
    for (auto& [country, list] : by_country) {
        std::sort(list.begin(), list.end(),
                  [](const auto* a, const auto* b) { return a->effective_from < b->effective_from; });
        for (std::size_t i = 1; i < list.size(); ++i) {
            const auto* prev = list[i - 1];
            if (!prev->effective_until || list[i]->effective_from < *prev->effective_until) {
                throw ConfigError("overlapping adequacy decisions for " + country.to_string());
            }
        }
    }
}

AdequacyLedger AdequacyLedger::parse_csv(std::string_view content, Date audit_date) {
    const auto table = csv::parse(content);
    const auto col = [&](std::string_view name) {
        auto c = table.column(name);
        if (!c) throw ConfigError("adequacy ledger: missing column '" + std::string(name) + "'");
        return *c;
    };
    const auto c_country = col("country"), c_status = col("status"), c_from = col("effective_from"),
               c_until = col("effective_until"), c_note = col("scope_note");
    std::vector<AdequacyDecision> out;
    for (const auto& row : table.rows) {
        const auto where = "adequacy ledger line " + std::to_string(row.line) + ": ";
        const auto field = [&](std::size_t i) -> std::string {
            return i < row.fields.size() ? std::string(text::trim(row.fields[i])) : std::string();
        };
        const auto country = normalize_country(field(c_country));
        if (!country) throw ConfigError(where + "unknown country '" + field(c_country) + "'");
        const auto status = parse_adequacy_status(field(c_status));
        if (!status) throw ConfigError(where + "unknown status '" + field(c_status) + "'");
        const auto from = Date::try_parse(field(c_from));
        if (!from) throw ConfigError(where + "bad effective_from");
        std::optional<Date> until;
        if (!field(c_until).empty()) {
            until = Date::try_parse(field(c_until));
            if (!until) throw ConfigError(where + "bad effective_until");
        }
        out.push_back(AdequacyDecision{*country, *status, *from, until, field(c_note)});
    }
    return AdequacyLedger(std::move(out), audit_date);
}

AdequacyLedger AdequacyLedger::load_csv(const std::string& path, Date audit_date) {
    return parse_csv(text::read_file(path), audit_date);
}

std::string AdequacyLedger::to_csv() const {
    std::string out = "country,status,effective_from,effective_until,scope_note\n";
    for (const auto& d : decisions_) {
        out += csv::join({d.country.to_string(), std::string(to_string(d.status)), d.effective_from.to_string(),
                          d.effective_until ? d.effective_until->to_string() : std::string(), d.scope_note});
        out += '\n';
    }
    return out;
}

Adequacy is_adequate(const CountryCode& country, const AdequacyLedger& ledger, Date date) {
    if (is_eu_member(country)) return Adequacy::Adequate;
    const auto& ds = ledger.decisions();
    const bool active = std::any_of(ds.begin(), ds.end(),
                                    [&](const auto& d) { return d.country == country && d.active_on(date); });
    return active ? Adequacy::Adequate : Adequacy::NonAdequate;
}

}  // namespace dlaudit
