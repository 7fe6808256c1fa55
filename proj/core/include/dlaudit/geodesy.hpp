#pragma once

#include <map>
#include <string>
#include <string_view>

#include "dlaudit/country.hpp"
#include "dlaudit/model.hpp"

namespace dlaudit {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kSpeedOfLightKmPerMs = 299.792458;

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// 2 * distance / rtt: the round trip covers the path twice.
/// Throws NonPositiveRtt when rtt_ms <= 0 and PreconditionError when distance_km < 0.
double implied_speed(double distance_km, double rtt_ms);

struct SolConfig {
    double max_speed_km_per_ms = 4.0 / 9.0 * kSpeedOfLightKmPerMs;

    /// Throws ConfigError unless 0 < max_speed <= c.
    void validate() const;
};

enum class SolVerdict { Feasible, Infeasible };

std::string_view to_string(SolVerdict v);

/// Infeasible iff the implied speed strictly exceeds the configured bound.
SolVerdict sol_feasible(double distance_km, double rtt_ms, const SolConfig& cfg = {});

/// Regional average latencies used to gate source-based measurements.
struct LatencyThresholdConfig {
    double fraction = 0.9;
    std::map<std::string, double> region_avgs_ms;
    std::map<CountryCode, std::string> country_to_region;
    /// Per-country averages (Latin America); take precedence over the region mapping.
    std::map<CountryCode, double> country_overrides_ms;

    /// Built-in defaults; identical to the bundled thresholds.json.
    static LatencyThresholdConfig defaults();
    /// JSON document with `fraction`, `averages`, `country_region`, `latam_overrides`.
    static LatencyThresholdConfig parse_json(std::string_view content);
    static LatencyThresholdConfig load(const std::string& path);
    [[nodiscard]] std::string to_json() const;

    /// Throws ConfigError on non-positive averages, a fraction outside (0, 1],
    /// or a mapping to an undefined region.
    void validate() const;

    /// Average latency to `country`. Throws UnmappedDestination.
    [[nodiscard]] double average_ms(const CountryCode& country) const;
    [[nodiscard]] double threshold_ms(const CountryCode& country) const { return fraction * average_ms(country); }

    friend bool operator==(const LatencyThresholdConfig&, const LatencyThresholdConfig&) = default;
};

enum class GateVerdict { Candidate, ExcludedTooClose };

std::string_view to_string(GateVerdict v);

/// Candidate iff observed_ms >= fraction * average(dest_country).
/// Throws NonPositiveRtt when observed_ms <= 0 and UnmappedDestination.
GateVerdict source_latency_gate(double observed_ms, const CountryCode& dest_country,
                                const LatencyThresholdConfig& cfg);

}  // namespace dlaudit
