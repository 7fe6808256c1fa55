#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dlaudit {

/// ISO 3166-1 alpha-2 code. Always two ASCII uppercase letters.
class CountryCode {
public:
    /// Throws PreconditionError unless `code` is exactly two uppercase ASCII letters.
    static CountryCode from(std::string_view code);
    static std::optional<CountryCode> try_from(std::string_view code) noexcept;

    [[nodiscard]] std::string_view str() const { return {chars_.data(), 2}; }
    [[nodiscard]] std::string to_string() const { return std::string(str()); }

    friend bool operator==(const CountryCode&, const CountryCode&) = default;
    friend auto operator<=>(const CountryCode&, const CountryCode&) = default;

private:
    constexpr CountryCode() = default;
    std::array<char, 2> chars_{};
};

std::ostream& operator<<(std::ostream& os, const CountryCode& c);

/// Maps an ISO code in any case, or an English country name, to its code.
/// Returns nullopt for unknown inputs.
std::optional<CountryCode> normalize_country(std::string_view name_or_code);

/// The 27 EU member states.
const std::vector<CountryCode>& eu_members();
bool is_eu_member(const CountryCode& c);

}  // namespace dlaudit

template <>
struct std::hash<dlaudit::CountryCode> {
    std::size_t operator()(const dlaudit::CountryCode& c) const noexcept {
        return std::hash<std::string_view>{}(c.str());
    }
};
