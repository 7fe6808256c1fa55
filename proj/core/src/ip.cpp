#include "dlaudit/ip.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <string>

#include "dlaudit/error.hpp"

namespace dlaudit {

std::optional<IpAddress> IpAddress::parse(std::string_view s) noexcept {
    if (s.empty() || s.size() > INET6_ADDRSTRLEN) return std::nullopt;
    const std::string buf(s);
    IpAddress ip;
    if (buf.find(':') == std::string::npos) {
        if (inet_pton(AF_INET, buf.c_str(), ip.bytes_.data()) != 1) return std::nullopt;
        ip.family_ = Family::V4;
    } else {
        if (inet_pton(AF_INET6, buf.c_str(), ip.bytes_.data()) != 1) return std::nullopt;
        ip.family_ = Family::V6;
    }
    return ip;
}

IpAddress IpAddress::from(std::string_view s) {
    if (auto ip = parse(s)) return *ip;
    throw PreconditionError("invalid IP address '" + std::string(s) + "'");
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(family_ == Family::V4 ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof(buf));
    return buf;
}

IpAddress IpAddress::masked(int prefix_len) const {
    IpAddress out = *this;
    const int width = bit_width();
    for (int bit = std::max(prefix_len, 0); bit < width; ++bit) {
        out.bytes_[bit / 8] &= static_cast<std::uint8_t>(~(0x80u >> (bit % 8)));
    }
    return out;
}

std::ostream& operator<<(std::ostream& os, const IpAddress& ip) { return os << ip.to_string(); }

std::optional<IpPrefix> IpPrefix::parse(std::string_view s) noexcept {
    const auto slash = s.find('/');
    const auto ip = IpAddress::parse(s.substr(0, slash));
    if (!ip) return std::nullopt;
    int len = ip->bit_width();
    if (slash != std::string_view::npos) {
        const auto digits = s.substr(slash + 1);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || len < 0 || len > ip->bit_width()) {
            return std::nullopt;
        }
    }
    return IpPrefix{ip->masked(len), len};
}

bool IpPrefix::contains(const IpAddress& ip) const {
    return ip.family() == network.family() && ip.masked(length) == network;
}

std::string IpPrefix::to_string() const { return network.to_string() + "/" + std::to_string(length); }

}  // namespace dlaudit
