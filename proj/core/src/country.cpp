#include "dlaudit/country.hpp"

#include <algorithm>
#include <utility>

#include "dlaudit/error.hpp"
#include "text.hpp"

namespace dlaudit {

namespace {

#include "country_table.inc"

constexpr std::string_view kEuMembers[] = {"AT", "BE", "BG", "CY", "CZ", "DE", "DK", "EE", "ES",
                                           "FI", "FR", "GR", "HR", "HU", "IE", "IT", "LT", "LU",
                                           "LV", "MT", "NL", "PL", "PT", "RO", "SE", "SI", "SK"};

bool is_upper_pair(std::string_view s) {
    return s.size() == 2 && s[0] >= 'A' && s[0] <= 'Z' && s[1] >= 'A' && s[1] <= 'Z';
}

}  // namespace

std::optional<CountryCode> CountryCode::try_from(std::string_view code) noexcept {
    if (!is_upper_pair(code)) return std::nullopt;
    CountryCode c;
    c.chars_ = {code[0], code[1]};
    return c;
}

CountryCode CountryCode::from(std::string_view code) {
    if (auto c = try_from(code)) return *c;
    throw PreconditionError("invalid country code '" + std::string(code) + "'");
}

std::ostream& operator<<(std::ostream& os, const CountryCode& c) { return os << c.str(); }

std::optional<CountryCode> normalize_country(std::string_view name_or_code) {
    const auto trimmed = text::trim(name_or_code);
    if (trimmed.size() == 2) {
        const auto upper = text::to_upper(trimmed);
        // Greece is "EL" in EU usage; the UK is sometimes "UK".
        if (upper == "EL") return CountryCode::from("GR");
        if (upper == "UK") return CountryCode::from("GB");
        if (std::binary_search(std::begin(kIsoCodes), std::end(kIsoCodes), std::string_view(upper))) {
            return CountryCode::try_from(upper);
        }
        return std::nullopt;
    }
    const auto lower = text::to_lower(trimmed);
    const auto it = std::lower_bound(std::begin(kCountryNames), std::end(kCountryNames), std::string_view(lower),
                                     [](const auto& entry, std::string_view key) { return entry.first < key; });
    if (it != std::end(kCountryNames) && it->first == lower) return CountryCode::try_from(it->second);
    return std::nullopt;
}

const std::vector<CountryCode>& eu_members() {
    static const std::vector<CountryCode> members = [] {
        std::vector<CountryCode> v;
        for (auto c : kEuMembers) v.push_back(CountryCode::from(c));
        return v;
    }();
    return members;
}

bool is_eu_member(const CountryCode& c) {
    return std::binary_search(std::begin(kEuMembers), std::end(kEuMembers), c.str());
}

}  // namespace dlaudit
