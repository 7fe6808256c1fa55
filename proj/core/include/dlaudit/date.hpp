#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace dlaudit {

/// Calendar date (proleptic Gregorian), ISO-8601 `YYYY-MM-DD` on the wire.
class Date {
public:
    constexpr Date() = default;
    explicit Date(std::chrono::year_month_day ymd);

    /// Throws PreconditionError on malformed or out-of-range input.
    static Date parse(std::string_view iso);
    static std::optional<Date> try_parse(std::string_view iso) noexcept;

    [[nodiscard]] std::chrono::year_month_day ymd() const { return ymd_; }
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const Date& a, const Date& b) { return a.ymd_ == b.ymd_; }
    friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
        return std::chrono::sys_days(a.ymd_) <=> std::chrono::sys_days(b.ymd_);
    }

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January, std::chrono::day{1}};
};

/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DDTHH:MM:SS` with optional fractional seconds and a `Z`
/// or `+00:00` suffix. Returns nullopt otherwise.
std::optional<Timestamp> parse_timestamp(std::string_view iso) noexcept;
std::string format_timestamp(Timestamp t);

}  // namespace dlaudit
