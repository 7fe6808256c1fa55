#include "dlaudit/date.hpp"

#include <fmt/format.h>

#include "dlaudit/error.hpp"

namespace dlaudit {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

Date::Date(std::chrono::year_month_day ymd) : ymd_(ymd) {
    if (!ymd.ok()) throw PreconditionError("invalid calendar date");
}

std::optional<Date> Date::try_parse(std::string_view iso) noexcept {
    int y = 0, m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    if (!read_int(iso, 0, 4, y) || !read_int(iso, 5, 2, m) || !read_int(iso, 8, 2, d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date(ymd);
}

Date Date::parse(std::string_view iso) {
    if (auto d = try_parse(iso)) return *d;
    throw PreconditionError("invalid ISO date '" + std::string(iso) + "'");
}

std::string Date::to_string() const {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd_.year()), static_cast<unsigned>(ymd_.month()),
                       static_cast<unsigned>(ymd_.day()));
}

std::optional<Timestamp> parse_timestamp(std::string_view iso) noexcept {
    if (iso.size() < 19) return std::nullopt;
    const auto date = Date::try_parse(iso.substr(0, 10));
    if (!date || (iso[10] != 'T' && iso[10] != ' ') || iso[13] != ':' || iso[16] != ':') return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!read_int(iso, 11, 2, hh) || !read_int(iso, 14, 2, mm) || !read_int(iso, 17, 2, ss)) return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    std::string_view rest = iso.substr(19);
    if (!rest.empty() && rest.front() == '.') {
        rest.remove_prefix(1);
        std::size_t n = 0;
        while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
        if (n == 0) return std::nullopt;
        rest.remove_prefix(n);
    }
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) return std::nullopt;
    using namespace std::chrono;
    return sys_days(date->ymd()) + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss tod{t - day};
    return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", Date(ymd).to_string(), tod.hours().count(),
                       tod.minutes().count(), tod.seconds().count());
}

}  // namespace dlaudit
