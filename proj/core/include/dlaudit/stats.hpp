#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlaudit/country.hpp"
#include "dlaudit/ingest.hpp"
#include "dlaudit/labeling.hpp"
#include "dlaudit/model.hpp"

namespace dlaudit {

// ---------------------------------------------------------------------------
// Per-country rates
// ---------------------------------------------------------------------------

struct CountryCounts {
    CountryCode country;
    std::size_t traceroutes_total = 0;
    std::size_t traceroutes_non_adequate = 0;
    std::size_t ips_total = 0;
    std::size_t ips_non_adequate = 0;
    std::size_t tracker_ips_total = 0;
    std::size_t tracker_ips_non_adequate = 0;
};

struct CountryRateRow {
    CountryCode country;
    double pct_traceroutes = 0.0;
    double pct_ips = 0.0;
    double pct_tracker_ips = 0.0;

    [[nodiscard]] double mean() const { return (pct_traceroutes + pct_ips + pct_tracker_ips) / 3.0; }
};

/// 100 * non-adequate / total per metric, sorted by decreasing row mean, then
/// by country code. Throws ZeroTotal when a country has a zero total.
std::vector<CountryRateRow> country_rates(const std::vector<CountryCounts>& counts);
void sort_rate_rows(std::vector<CountryRateRow>& rows);

/// CSV `country,pct_traceroutes,pct_ips,pct_tracker_ips`.
std::vector<CountryRateRow> parse_rates_csv(std::string_view content);
std::string rates_to_csv(const std::vector<CountryRateRow>& rows);

/// Column means over all rows; nullopt when `rows` is empty.
std::optional<CountryRateRow> column_means(const std::vector<CountryRateRow>& rows);

// ---------------------------------------------------------------------------
// Flow matrix
// ---------------------------------------------------------------------------

struct FlowMatrix {
    std::map<std::pair<CountryCode, CountryCode>, std::size_t> counts;  // (source, destination)

    [[nodiscard]] std::size_t total() const;
    [[nodiscard]] std::map<CountryCode, std::size_t> destination_totals() const;
    /// Destinations ordered by decreasing count, ties by code; at most k.
    [[nodiscard]] std::vector<CountryCode> top_destinations(std::size_t k) const;
    /// Share of all flows reaching the top-k destinations, in percent (0 when empty).
    [[nodiscard]] double coverage_pct(std::size_t k) const;
};

/// Counts one flow per (source country, destination country) pair.
FlowMatrix flow_matrix(const std::vector<std::pair<CountryCode, CountryCode>>& flows);

// ---------------------------------------------------------------------------
// One-way ANOVA
// ---------------------------------------------------------------------------

struct AnovaResult {
    double f_stat = 0.0;
    double p_value = 1.0;
    int df_between = 0;
    int df_within = 0;
    double ss_between = 0.0;
    double ss_within = 0.0;
    std::vector<double> group_means;
};

/// Standard one-way F test. Requires >= 2 groups, each non-empty, and more
/// observations than groups (PreconditionError otherwise). Zero within-group
/// variance with equal means gives F = 0, p = 1; with unequal means F = inf, p = 0.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct RegionAnova {
    AnovaResult result;
    std::map<Region, double> group_means;
    std::map<Region, std::vector<CountryCode>> members;
};

/// Groups one rate column by region. Countries without a region are skipped.
RegionAnova anova_by_region(const std::vector<CountryRateRow>& rows, const std::map<CountryCode, Region>& regions,
                            double CountryRateRow::*column);

/// UN M49 sub-regions of the 19 audited countries.
std::map<CountryCode, Region> default_regions();
/// CSV `country,region`.
std::map<CountryCode, Region> parse_regions_csv(std::string_view content);

// ---------------------------------------------------------------------------
// Cookies and categories
// ---------------------------------------------------------------------------

struct CookieObservation {
    DomainName initial_site;
    Cookie cookie;
};

struct CookieSummaryRow {
    std::string pattern;
    std::string org;
    std::string purpose;
    std::size_t cookie_count = 0;   // distinct (site, name, value)
    std::size_t website_count = 0;  // distinct initial sites
};

/// One row per rule with at least one match, in rule order, followed by a
/// "(high-entropy)" row for unmatched cookies whose value looks like an identifier.
std::vector<CookieSummaryRow> cookie_summary(const std::vector<CookieObservation>& cookies,
                                             const std::vector<CookieIdRule>& rules,
                                             const EntropyHeuristic& heuristic = {});

inline constexpr std::string_view kUncategorized = "Uncategorized";

/// Distinct sites per category; sites missing from the map count as Uncategorized.
std::map<std::string, std::size_t> category_counts(const std::vector<DomainName>& sites,
                                                   const std::map<DomainName, std::string>& categories);
/// CSV `site,category`.
std::map<DomainName, std::string> parse_categories_csv(std::string_view content);

// ---------------------------------------------------------------------------
// Latency CDF
// ---------------------------------------------------------------------------

struct CdfPoint {
    double x = 0.0;
    double f = 0.0;

    friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// Empirical CDF evaluated at every distinct value. Throws EmptyInput.
std::vector<CdfPoint> latency_cdf(std::vector<double> values);

/// F evaluated at x for a CDF produced by latency_cdf (right-continuous step).
double cdf_at(const std::vector<CdfPoint>& cdf, double x);

}  // namespace dlaudit
