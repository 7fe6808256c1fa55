#include "dlaudit/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dlaudit/error.hpp"
#include "text.hpp"

namespace dlaudit {

namespace {

// Multi-label public suffixes seen in European and destination-country hostnames.
// Anything not listed falls back to "last label is the suffix".
const std::unordered_set<std::string_view>& multi_label_suffixes() {
    static const std::unordered_set<std::string_view> s = {
        "ac.uk",  "co.uk",  "gov.uk", "ltd.uk", "me.uk",  "net.uk", "org.uk", "plc.uk", "com.au", "net.au",
        "org.au", "edu.au", "gov.au", "co.nz",  "net.nz", "org.nz", "co.jp",  "ne.jp",  "or.jp",  "ac.jp",
        "go.jp",  "co.kr",  "or.kr",  "com.br", "net.br", "org.br", "gov.br", "com.mx", "gob.mx", "org.mx",
        "com.tr", "net.tr", "org.tr", "gov.tr", "edu.tr", "gen.tr", "com.cn", "net.cn", "org.cn", "gov.cn",
        "com.hk", "net.hk", "org.hk", "com.sg", "com.my", "co.th",  "in.th",  "or.th",  "ac.th",  "co.in",
        "net.in", "org.in", "com.ar", "msk.ru", "spb.ru", "com.ua", "co.za",  "com.pl", "net.pl", "org.pl",
        "com.gr", "com.cy", "com.mt", "co.il",  "org.il", "com.pk", "com.vn", "co.id",  "com.ph", "com.tw",
        "com.sa", "com.eg", "co.ae",  "com.es", "com.pt", "co.at",  "or.at",  "com.hr", "com.ro", "co.hu",
    };
    return s;
}

bool valid_label(std::string_view label) {
    if (label.empty() || label.size() > 63) return false;
    if (label.front() == '-' || label.back() == '-') return false;
    return std::all_of(label.begin(), label.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
}

}  // namespace

Ascp Ascp::make(std::uint32_t asn, CountryCode country) {
    if (asn == 0) throw PreconditionError("ASN must be >= 1");
    return Ascp{asn, country};
}

std::string Ascp::to_string() const { return "AS" + std::to_string(asn) + "/" + country.to_string(); }

GeoPoint GeoPoint::make(double lat, double lon) {
    GeoPoint p{lat, lon};
    if (!p.valid()) throw PreconditionError("coordinates out of range");
    return p;
}

bool GeoPoint::valid() const { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }

std::string_view to_string(Granularity g) {
    switch (g) {
        case Granularity::City: return "city";
        case Granularity::Country: return "country";
        case Granularity::None: return "none";
    }
    return "none";
}

std::optional<Granularity> parse_granularity(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "city") return Granularity::City;
    if (v == "country") return Granularity::Country;
    if (v == "none" || v.empty()) return Granularity::None;
    return std::nullopt;
}

GeoRecord GeoRecord::make(IpAddress ip, std::optional<CountryCode> country, std::optional<GeoPoint> point,
                          Granularity granularity) {
    if (granularity == Granularity::City && !point) throw PreconditionError("city granularity requires a point");
    if (granularity == Granularity::None && country) throw PreconditionError("granularity none forbids a country");
    if (point && !point->valid()) throw PreconditionError("coordinates out of range");
    return GeoRecord{ip, country, point, granularity};
}

std::string_view to_string(Region r) {
    switch (r) {
        case Region::Northern: return "Northern";
        case Region::Southern: return "Southern";
        case Region::Eastern: return "Eastern";
        case Region::Western: return "Western";
    }
    return "Northern";
}

std::optional<Region> parse_region(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "northern" || v == "n") return Region::Northern;
    if (v == "southern" || v == "s") return Region::Southern;
    if (v == "eastern" || v == "e") return Region::Eastern;
    if (v == "western" || v == "w") return Region::Western;
    return std::nullopt;
}

std::optional<DomainName> DomainName::parse(std::string_view s) noexcept {
    auto name = text::to_lower(text::trim(s));
    if (!name.empty() && name.back() == '.') name.pop_back();
    if (name.empty() || name.size() > 253) return std::nullopt;
    const auto labels = text::split(name, '.');
    if (!std::all_of(labels.begin(), labels.end(), valid_label)) return std::nullopt;

    DomainName d;
    d.fqdn_ = name;
    // Registrable = public suffix + one label.
    std::size_t suffix_labels = 1;
    if (labels.size() >= 2) {
        const std::string_view last_two(name.data() + (labels[labels.size() - 2].data() - name.data()),
                                        labels[labels.size() - 2].size() + 1 + labels.back().size());
        if (multi_label_suffixes().count(last_two)) suffix_labels = 2;
    }
    const std::size_t keep = std::min(labels.size(), suffix_labels + 1);
    const auto& first_kept = labels[labels.size() - keep];
    d.registrable_ = static_cast<std::size_t>(first_kept.data() - name.data());
    return d;
}

DomainName DomainName::from(std::string_view s) {
    if (auto d = parse(s)) return *d;
    throw PreconditionError("invalid domain name '" + std::string(s) + "'");
}

std::vector<std::string_view> DomainName::labels() const { return text::split(fqdn_, '.'); }

std::vector<std::string_view> DomainName::suffixes_to_registrable() const {
    std::vector<std::string_view> out;
    std::string_view rest(fqdn_);
    for (;;) {
        out.push_back(rest);
        if (rest.size() <= fqdn_.size() - registrable_) break;
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos) break;
        rest.remove_prefix(dot + 1);
    }
    return out;
}

DomainName DomainName::without_www() const {
    if (fqdn_.rfind("www.", 0) == 0 && registrable_ >= 4) {
        if (auto d = parse(std::string_view(fqdn_).substr(4))) return *d;
    }
    return *this;
}

std::ostream& operator<<(std::ostream& os, const DomainName& d) { return os << d.fqdn(); }

}  // namespace dlaudit
