#pragma once

// Shared helpers for the unit and acceptance suites: paths, a seeded random
// source with small generators, and builders for hand-made records.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <random>
#include <unistd.h>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dlaudit/ingest.hpp"
#include "dlaudit/model.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path data_dir() { return DLAUDIT_TEST_DATA_DIR; }
inline fs::path fixture_dir() { return DLAUDIT_TEST_FIXTURE_DIR; }

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh, empty scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("dlaudit-test-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
    }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }
    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(v.size()) - 1))];
    }
    std::mt19937_64& engine() { return eng_; }

    dlaudit::GeoPoint point() { return dlaudit::GeoPoint::make(uniform(-90.0, 90.0), uniform(-180.0, 180.0)); }

    std::string label(std::size_t min_len = 1, std::size_t max_len = 10) {
        static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
        const auto n = static_cast<std::size_t>(integer(static_cast<std::int64_t>(min_len),
                                                        static_cast<std::int64_t>(max_len)));
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(integer(0, 25))];
        return s;
    }

    std::string domain(int labels = 2) {
        std::string s = label(3, 8);
        for (int i = 1; i < labels - 1; ++i) s = label(2, 6) + "." + s;
        return s + "." + pick(std::vector<std::string>{"com", "net", "org", "de", "io"});
    }

    dlaudit::IpAddress ipv4() {
        return dlaudit::IpAddress::from(std::to_string(integer(1, 223)) + "." + std::to_string(integer(0, 255)) + "." +
                                        std::to_string(integer(0, 255)) + "." + std::to_string(integer(1, 254)));
    }

private:
    std::mt19937_64 eng_;
};

inline dlaudit::CountryCode cc(const char* s) { return dlaudit::CountryCode::from(s); }
inline dlaudit::IpAddress ip(const char* s) { return dlaudit::IpAddress::from(s); }
inline dlaudit::DomainName dn(const char* s) { return dlaudit::DomainName::from(s); }

/// One hop: (from address or "" for a timeout, rtt or nullopt).
using ReplySpec = std::pair<std::string, std::optional<double>>;

inline dlaudit::Hop hop(int index, std::initializer_list<ReplySpec> replies) {
    dlaudit::Hop h;
    h.index = index;
    for (const auto& [from, rtt] : replies) {
        dlaudit::Reply r;
        if (!from.empty()) r.from_ip = dlaudit::IpAddress::from(from);
        r.rtt_ms = rtt;
        h.replies.push_back(r);
    }
    return h;
}

inline dlaudit::TracerouteRecord trace(const std::string& id, const std::string& dst, std::vector<dlaudit::Hop> hops,
                                       dlaudit::StageTag stage = dlaudit::StageTag::SourceBased,
                                       dlaudit::Ascp src = dlaudit::Ascp::make(3320, cc("DE"))) {
    dlaudit::TracerouteRecord t{id, src, std::nullopt, dlaudit::IpAddress::from(dst),
                                dlaudit::IpAddress::from(dst), std::move(hops), stage, {}};
    return t;
}

/// Source-style trace: router at hop 1 with rtt `first`, destination at hop 3 with rtt `last`.
inline dlaudit::TracerouteRecord simple_trace(const std::string& id, const std::string& dst,
                                              std::optional<double> first, std::optional<double> last,
                                              dlaudit::StageTag stage = dlaudit::StageTag::SourceBased) {
    std::vector<dlaudit::Hop> hops;
    hops.push_back(first ? hop(1, {{"10.0.0.1", first}}) : hop(1, {{"", std::nullopt}}));
    hops.push_back(hop(2, {{"172.16.0.1", 5.0}}));
    hops.push_back(last ? hop(3, {{dst, last}}) : hop(3, {{"", std::nullopt}}));
    return trace(id, dst, std::move(hops), stage);
}

}  // namespace testsupport
