#include "dlaudit/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "dlaudit/special_functions.hpp"
#include "text.hpp"

namespace dlaudit {

namespace {

double pct(std::size_t part, std::size_t total) {
    return 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

double parse_number(std::string_view s, const std::string& where) {
    s = text::trim(s);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError(where + ": invalid number '" + std::string(s) + "'");
    }
    return v;
}

std::size_t need_column(const csv::Table& t, std::string_view name, std::string_view what) {
    if (const auto c = t.column(name)) return *c;
    throw ConfigError(std::string(what) + ": missing column '" + std::string(name) + "'");
}

std::string field(const csv::Row& row, std::size_t i) {
    return i < row.fields.size() ? std::string(text::trim(row.fields[i])) : std::string();
}

}  // namespace

std::vector<CountryRateRow> country_rates(const std::vector<CountryCounts>& counts) {
    std::vector<CountryRateRow> rows;
    rows.reserve(counts.size());
    for (const auto& c : counts) {
        if (c.traceroutes_total == 0 || c.ips_total == 0 || c.tracker_ips_total == 0) {
            throw ZeroTotal(c.country.to_string());
        }
        rows.push_back({c.country, pct(c.traceroutes_non_adequate, c.traceroutes_total),
                        pct(c.ips_non_adequate, c.ips_total), pct(c.tracker_ips_non_adequate, c.tracker_ips_total)});
    }
    sort_rate_rows(rows);
    return rows;
}

void sort_rate_rows(std::vector<CountryRateRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const CountryRateRow& a, const CountryRateRow& b) {
        const double ma = a.mean(), mb = b.mean();
        if (ma != mb) return ma > mb;
        return a.country < b.country;
    });
}

std::vector<CountryRateRow> parse_rates_csv(std::string_view content) {
    const auto table = csv::parse(content);
    const auto cc = need_column(table, "country", "rates"), ct = need_column(table, "pct_traceroutes", "rates"),
               ci = need_column(table, "pct_ips", "rates"), ck = need_column(table, "pct_tracker_ips", "rates");
    std::vector<CountryRateRow> rows;
    for (const auto& row : table.rows) {
        const auto where = "rates line " + std::to_string(row.line);
        const auto country = normalize_country(field(row, cc));
        if (!country) throw ConfigError(where + ": unknown country '" + field(row, cc) + "'");
        CountryRateRow r{*country, parse_number(field(row, ct), where), parse_number(field(row, ci), where),
                         parse_number(field(row, ck), where)};
        for (const double v : {r.pct_traceroutes, r.pct_ips, r.pct_tracker_ips}) {
            if (v < 0.0 || v > 100.0) throw ConfigError(where + ": percentage outside [0, 100]");
        }
        rows.push_back(r);
    }
    return rows;
}

std::string rates_to_csv(const std::vector<CountryRateRow>& rows) {
    std::string out = "country,pct_traceroutes,pct_ips,pct_tracker_ips\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.4f},{:.4f},{:.4f}\n", r.country.str(), r.pct_traceroutes, r.pct_ips,
                           r.pct_tracker_ips);
    }
    return out;
}

std::optional<CountryRateRow> column_means(const std::vector<CountryRateRow>& rows) {
    if (rows.empty()) return std::nullopt;
    CountryRateRow m{rows.front().country, 0.0, 0.0, 0.0};
    for (const auto& r : rows) {
        m.pct_traceroutes += r.pct_traceroutes;
        m.pct_ips += r.pct_ips;
        m.pct_tracker_ips += r.pct_tracker_ips;
    }
    const auto n = static_cast<double>(rows.size());
    m.pct_traceroutes /= n;
    m.pct_ips /= n;
    m.pct_tracker_ips /= n;
    return m;
}

std::size_t FlowMatrix::total() const {
    std::size_t t = 0;
    for (const auto& [k, v] : counts) t += v;
    return t;
}

std::map<CountryCode, std::size_t> FlowMatrix::destination_totals() const {
    std::map<CountryCode, std::size_t> out;
    for (const auto& [k, v] : counts) out[k.second] += v;
    return out;
}

std::vector<CountryCode> FlowMatrix::top_destinations(std::size_t k) const {
    const auto totals = destination_totals();
    std::vector<std::pair<CountryCode, std::size_t>> ranked(totals.begin(), totals.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<CountryCode> out;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].first);
    return out;
}

double FlowMatrix::coverage_pct(std::size_t k) const {
    const auto all = total();
    if (all == 0) return 0.0;
    const auto totals = destination_totals();
    std::size_t covered = 0;
    for (const auto& c : top_destinations(k)) covered += totals.at(c);
    return pct(covered, all);
}

FlowMatrix flow_matrix(const std::vector<std::pair<CountryCode, CountryCode>>& flows) {
    FlowMatrix m;
    for (const auto& f : flows) ++m.counts[f];
    return m;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw PreconditionError("ANOVA needs at least two groups");
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) throw PreconditionError("ANOVA group is empty");
        n += g.size();
        for (const double v : g) {
            if (!std::isfinite(v)) throw PreconditionError("ANOVA observation is not finite");
            sum += v;
        }
    }
    const std::size_t k = groups.size();
    if (n <= k) throw PreconditionError("ANOVA needs more observations than groups");

    AnovaResult r;
    r.df_between = static_cast<int>(k - 1);
    r.df_within = static_cast<int>(n - k);
    const double grand = sum / static_cast<double>(n);
    for (const auto& g : groups) {
        double gs = 0.0;
        for (const double v : g) gs += v;
        const double mean = gs / static_cast<double>(g.size());
        r.group_means.push_back(mean);
        r.ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (const double v : g) r.ss_within += (v - mean) * (v - mean);
    }
    const double msb = r.ss_between / r.df_between;
    const double msw = r.ss_within / r.df_within;
    if (r.ss_within == 0.0) {
        const bool equal_means = std::all_of(r.group_means.begin(), r.group_means.end(),
                                             [&](double m) { return m == r.group_means.front(); });
        r.f_stat = equal_means ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_value = equal_means ? 1.0 : 0.0;
        return r;
    }
    r.f_stat = msb / msw;
    r.p_value = f_distribution_sf(r.f_stat, r.df_between, r.df_within);
    return r;
}

RegionAnova anova_by_region(const std::vector<CountryRateRow>& rows, const std::map<CountryCode, Region>& regions,
                            double CountryRateRow::*column) {
    std::map<Region, std::vector<double>> grouped;
    RegionAnova out;
    for (const auto& r : rows) {
        const auto it = regions.find(r.country);
        if (it == regions.end()) continue;
        grouped[it->second].push_back(r.*column);
        out.members[it->second].push_back(r.country);
    }
    std::vector<std::vector<double>> groups;
    for (const auto& [region, values] : grouped) groups.push_back(values);
    out.result = one_way_anova(groups);
    std::size_t i = 0;
    for (const auto& [region, values] : grouped) out.group_means[region] = out.result.group_means[i++];
    return out;
}

std::map<CountryCode, Region> default_regions() {
    std::map<CountryCode, Region> m;
    const auto add = [&](Region r, std::initializer_list<const char*> codes) {
        for (const auto* c : codes) m.emplace(CountryCode::from(c), r);
    };
    add(Region::Northern, {"DK", "FI", "IE", "SE"});
    add(Region::Southern, {"ES", "GR", "HR", "IT", "PT"});
    add(Region::Eastern, {"BG", "CZ", "HU", "PL", "RO", "SK"});
    add(Region::Western, {"AT", "BE", "DE", "FR"});
    return m;
}

std::map<CountryCode, Region> parse_regions_csv(std::string_view content) {
    const auto table = csv::parse(content);
    const auto cc = need_column(table, "country", "regions"), cr = need_column(table, "region", "regions");
    std::map<CountryCode, Region> m;
    for (const auto& row : table.rows) {
        const auto where = "regions line " + std::to_string(row.line);
        const auto country = normalize_country(field(row, cc));
        const auto region = parse_region(field(row, cr));
        if (!country) throw ConfigError(where + ": unknown country '" + field(row, cc) + "'");
        if (!region) throw ConfigError(where + ": unknown region '" + field(row, cr) + "'");
        if (!m.emplace(*country, *region).second) {
            throw ConfigError(where + ": " + country->to_string() + " listed twice");
        }
    }
    return m;
}

std::vector<CookieSummaryRow> cookie_summary(const std::vector<CookieObservation>& cookies,
                                             const std::vector<CookieIdRule>& rules,
                                             const EntropyHeuristic& heuristic) {
    using CookieKey = std::tuple<std::string, std::string, std::string>;
    struct Acc {
        std::set<CookieKey> cookies;
        std::set<std::string> sites;
    };
    std::vector<Acc> acc(rules.size() + 1);
    for (const auto& obs : cookies) {
        std::size_t slot = rules.size();
        bool matched = false;
        for (std::size_t i = 0; i < rules.size(); ++i) {
            if (rules[i].matches(obs.cookie.name)) {
                slot = i;
                matched = true;
                break;
            }
        }
        if (!matched && !has_unique_identifier(obs.cookie.value, heuristic)) continue;
        acc[slot].cookies.emplace(obs.cookie.site.fqdn(), obs.cookie.name, obs.cookie.value);
        acc[slot].sites.insert(obs.initial_site.fqdn());
    }
    std::vector<CookieSummaryRow> out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (acc[i].cookies.empty()) continue;
        out.push_back({rules[i].pattern, rules[i].org, rules[i].purpose, acc[i].cookies.size(), acc[i].sites.size()});
    }
    if (!acc.back().cookies.empty()) {
        out.push_back({"(high-entropy)", "", "unique identifier", acc.back().cookies.size(), acc.back().sites.size()});
    }
    return out;
}

std::map<std::string, std::size_t> category_counts(const std::vector<DomainName>& sites,
                                                   const std::map<DomainName, std::string>& categories) {
    std::set<DomainName> distinct(sites.begin(), sites.end());
    std::map<std::string, std::size_t> out;
    for (const auto& s : distinct) {
        const auto it = categories.find(s);
        ++out[it == categories.end() ? std::string(kUncategorized) : it->second];
    }
    return out;
}

std::map<DomainName, std::string> parse_categories_csv(std::string_view content) {
    const auto table = csv::parse(content);
    const auto cs = need_column(table, "site", "categories"), cc = need_column(table, "category", "categories");
    std::map<DomainName, std::string> out;
    for (const auto& row : table.rows) {
        const auto site = DomainName::parse(field(row, cs));
        const auto cat = field(row, cc);
        if (!site || cat.empty()) {
            throw ConfigError("categories line " + std::to_string(row.line) + ": invalid row");
        }
        out.insert_or_assign(site->without_www(), cat);
    }
    return out;
}

std::vector<CdfPoint> latency_cdf(std::vector<double> values) {
    if (values.empty()) throw EmptyInput("latency_cdf: no values");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    std::vector<CdfPoint> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.push_back({values[i], static_cast<double>(i + 1) / n});
    }
    out.back().f = 1.0;
    return out;
}

double cdf_at(const std::vector<CdfPoint>& cdf, double x) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), x, [](double v, const CdfPoint& p) { return v < p.x; });
    return it == cdf.begin() ? 0.0 : std::prev(it)->f;
}

}  // namespace dlaudit
