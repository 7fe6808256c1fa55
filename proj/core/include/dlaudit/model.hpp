#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dlaudit/country.hpp"
#include "dlaudit/ip.hpp"

namespace dlaudit {

/// AS-country pair: one autonomous system operating in one country.
struct Ascp {
    std::uint32_t asn;
    CountryCode country;

    /// Throws PreconditionError when asn == 0.
    static Ascp make(std::uint32_t asn, CountryCode country);
    [[nodiscard]] std::string to_string() const;  // "AS3320/DE"

    friend bool operator==(const Ascp&, const Ascp&) = default;
    friend auto operator<=>(const Ascp&, const Ascp&) = default;
};

struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]

    /// Throws PreconditionError outside the valid ranges (or on NaN).
    static GeoPoint make(double lat, double lon);
    [[nodiscard]] bool valid() const;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

enum class Granularity { City, Country, None };

std::string_view to_string(Granularity g);
std::optional<Granularity> parse_granularity(std::string_view s);

/// Geolocation of one IP as reported by a geolocation source.
struct GeoRecord {
    IpAddress ip;
    std::optional<CountryCode> country;
    std::optional<GeoPoint> point;
    Granularity granularity = Granularity::None;

    /// Enforces: City requires a point; None requires no country.
    static GeoRecord make(IpAddress ip, std::optional<CountryCode> country, std::optional<GeoPoint> point,
                          Granularity granularity);

    friend bool operator==(const GeoRecord&, const GeoRecord&) = default;
};

enum class Region { Northern, Southern, Eastern, Western };

std::string_view to_string(Region r);
std::optional<Region> parse_region(std::string_view s);

/// Lowercase DNS hostname. `tld_plus_one` is the registrable domain.
class DomainName {
public:
    static std::optional<DomainName> parse(std::string_view s) noexcept;
    /// Throws PreconditionError on invalid names.
    static DomainName from(std::string_view s);

    [[nodiscard]] const std::string& fqdn() const { return fqdn_; }
    [[nodiscard]] std::string_view tld_plus_one() const { return std::string_view(fqdn_).substr(registrable_); }
    [[nodiscard]] std::vector<std::string_view> labels() const;
    /// Every suffix of the name from the fqdn down to the registrable domain. Views into this name.
    [[nodiscard]] std::vector<std::string_view> suffixes_to_registrable() const;
    /// The name without a leading "www." label.
    [[nodiscard]] DomainName without_www() const;

    friend bool operator==(const DomainName& a, const DomainName& b) { return a.fqdn_ == b.fqdn_; }
    friend std::strong_ordering operator<=>(const DomainName& a, const DomainName& b) {
        return a.fqdn_ <=> b.fqdn_;
    }

private:
    DomainName() = default;
    std::string fqdn_;
    std::size_t registrable_ = 0;
};

std::ostream& operator<<(std::ostream& os, const DomainName& d);

}  // namespace dlaudit

template <>
struct std::hash<dlaudit::DomainName> {
    std::size_t operator()(const dlaudit::DomainName& d) const noexcept { return std::hash<std::string>{}(d.fqdn()); }
};
