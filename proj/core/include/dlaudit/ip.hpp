#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace dlaudit {

/// IPv4 or IPv6 address. Ordering puts all IPv4 before IPv6, numerically within a family.
class IpAddress {
public:
    enum class Family : std::uint8_t { V4 = 4, V6 = 6 };

    static std::optional<IpAddress> parse(std::string_view s) noexcept;
    /// Throws PreconditionError on malformed input.
    static IpAddress from(std::string_view s);

    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] int bit_width() const { return family_ == Family::V4 ? 32 : 128; }
    /// Network-order bytes; IPv4 uses the first four.
    [[nodiscard]] const std::array<std::uint8_t, 16>& bytes() const { return bytes_; }
    [[nodiscard]] std::string to_string() const;

    /// Zeroes every bit past `prefix_len`.
    [[nodiscard]] IpAddress masked(int prefix_len) const;

    friend bool operator==(const IpAddress&, const IpAddress&) = default;
    friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

private:
    IpAddress() = default;
    Family family_ = Family::V4;
    std::array<std::uint8_t, 16> bytes_{};
};

std::ostream& operator<<(std::ostream& os, const IpAddress& ip);

/// CIDR prefix; a bare address parses as a host prefix.
struct IpPrefix {
    IpAddress network;
    int length = 0;

    static std::optional<IpPrefix> parse(std::string_view s) noexcept;
    [[nodiscard]] bool contains(const IpAddress& ip) const;
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const IpPrefix&, const IpPrefix&) = default;
};

}  // namespace dlaudit

template <>
struct std::hash<dlaudit::IpAddress> {
    std::size_t operator()(const dlaudit::IpAddress& ip) const noexcept {
        std::size_t h = static_cast<std::size_t>(ip.family());
        for (auto b : ip.bytes()) h = h * 1099511628211ULL ^ b;
        return h;
    }
};
