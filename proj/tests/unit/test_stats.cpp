#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "dlaudit/special_functions.hpp"
#include "dlaudit/stats.hpp"
#include "support.hpp"

using namespace dlaudit;
using testsupport::cc;
using testsupport::dn;

namespace {

// F statistic straight from the definition sums, in extended precision.
double brute_force_f(const std::vector<std::vector<double>>& groups) {
    long double n = 0, sum = 0;
    for (const auto& g : groups) {
        for (double v : g) {
            sum += v;
            n += 1;
        }
    }
    const long double grand = sum / n;
    long double ssb = 0, ssw = 0;
    for (const auto& g : groups) {
        long double gs = 0;
        for (double v : g) gs += v;
        const long double gm = gs / static_cast<long double>(g.size());
        ssb += static_cast<long double>(g.size()) * (gm - grand) * (gm - grand);
        for (double v : g) ssw += (v - gm) * (v - gm);
    }
    const long double k = static_cast<long double>(groups.size());
    return static_cast<double>((ssb / (k - 1)) / (ssw / (n - k)));
}

std::vector<std::vector<double>> random_groups(testsupport::Rng& rng) {
    std::vector<std::vector<double>> groups(static_cast<std::size_t>(rng.integer(2, 6)));
    for (auto& g : groups) {
        const double shift = rng.uniform(-5.0, 5.0);
        g.resize(static_cast<std::size_t>(rng.integer(2, 12)));
        for (auto& v : g) v = shift + rng.uniform(-10.0, 10.0);
    }
    return groups;
}

std::vector<CountryRateRow> table2() {
    return parse_rates_csv(testsupport::slurp(testsupport::fixture_dir() / "stats" / "table2_rates.csv"));
}

std::map<CountryCode, Region> bundled_regions() {
    return parse_regions_csv(testsupport::slurp(testsupport::data_dir() / "regions.csv"));
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("property: ANOVA F matches the definition sums") {
    testsupport::Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const auto groups = random_groups(rng);
        const auto r = one_way_anova(groups);
        const double want = brute_force_f(groups);
        REQUIRE(std::abs(r.f_stat - want) <= 1e-10 * std::abs(want));
    }
}

TEST_CASE("property: ANOVA p-value matches an independent F distribution") {
    testsupport::Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        const auto r = one_way_anova(random_groups(rng));
        const boost::math::fisher_f_distribution<double> dist(r.df_between, r.df_within);
        const double want = boost::math::cdf(boost::math::complement(dist, r.f_stat));
        REQUIRE(std::abs(r.p_value - want) <= 1e-10);
    }
}

TEST_CASE("property: ANOVA F is invariant under affine maps") {
    testsupport::Rng rng(43);
    for (int i = 0; i < 200; ++i) {
        auto groups = random_groups(rng);
        const double f0 = one_way_anova(groups).f_stat;
        double a = rng.uniform(0.1, 50.0) * (rng.chance(0.5) ? -1.0 : 1.0);
        const double b = rng.uniform(-100.0, 100.0);
        for (auto& g : groups) {
            for (auto& v : g) v = a * v + b;
        }
        REQUIRE(std::abs(one_way_anova(groups).f_stat - f0) <= 1e-9 * f0);
    }
}

TEST_CASE("ANOVA edge cases") {
    const auto same = one_way_anova({{1.0, 1.0}, {1.0, 1.0}, {1.0}});
    CHECK(same.f_stat == 0.0);
    CHECK(same.p_value == 1.0);
    const auto apart = one_way_anova({{1.0, 1.0}, {2.0, 2.0}});
    CHECK(std::isinf(apart.f_stat));
    CHECK(apart.p_value == 0.0);
    const auto equal_means = one_way_anova({{1.0, 3.0}, {0.0, 4.0}, {2.0, 2.0}});
    CHECK(equal_means.f_stat == 0.0);
    CHECK(equal_means.p_value == doctest::Approx(1.0));
    CHECK_THROWS_AS(one_way_anova({{1.0, 2.0}}), PreconditionError);
    CHECK_THROWS_AS(one_way_anova({{1.0}, {}}), PreconditionError);
    CHECK_THROWS_AS(one_way_anova({{1.0}, {2.0}}), PreconditionError);
}

TEST_CASE("incomplete beta agrees with Boost.Math") {
    testsupport::Rng rng(44);
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.uniform(0.5, 30.0), b = rng.uniform(0.5, 60.0), x = rng.uniform(0.0, 1.0);
        REQUIRE(std::abs(regularized_incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-12);
    }
    CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
    CHECK(f_distribution_sf(0.0, 3, 15) == 1.0);
}

TEST_CASE("regional ANOVA on the rounded country table") {
    const auto rows = table2();
    REQUIRE(rows.size() == 19);
    const auto regions = bundled_regions();
    CHECK(regions == default_regions());

    const auto trackers = anova_by_region(rows, regions, &CountryRateRow::pct_tracker_ips);
    CHECK(trackers.result.df_between == 3);
    CHECK(trackers.result.df_within == 15);
    CHECK(trackers.result.p_value >= 0.005);
    CHECK(trackers.result.p_value <= 0.03);
    CHECK(trackers.members.at(Region::Eastern).size() == 6);

    const auto ips = anova_by_region(rows, regions, &CountryRateRow::pct_ips);
    CHECK(ips.result.p_value >= 0.15);
    CHECK(ips.result.p_value <= 0.40);
    // Southern and Eastern Europe show the higher tracker rates.
    CHECK(trackers.group_means.at(Region::Southern) > trackers.group_means.at(Region::Northern));
    CHECK(trackers.group_means.at(Region::Eastern) > trackers.group_means.at(Region::Western));
}

TEST_CASE("column means of the country table") {
    const auto m = column_means(table2());
    REQUIRE(m);
    CHECK(std::abs(m->pct_ips - 2.3) <= 0.05);
    CHECK(std::abs(m->pct_tracker_ips - 1.4) <= 0.05);
    CHECK_FALSE(column_means({}));
}

TEST_CASE("flow matrix and top-10 coverage") {
    const auto t = csv::parse(testsupport::slurp(testsupport::fixture_dir() / "stats" / "table3_flows.csv"));
    std::vector<std::pair<CountryCode, CountryCode>> flows;
    for (const auto& row : t.rows) flows.emplace_back(cc(row.fields[0].c_str()), cc(row.fields[1].c_str()));
    const auto fm = flow_matrix(flows);
    CHECK(fm.total() == flows.size());
    CHECK(std::abs(fm.coverage_pct(10) - 97.7) <= 0.05);
    const auto top = fm.top_destinations(3);
    REQUIRE(top.size() == 3);
    CHECK(top[0] == cc("US"));
    CHECK(top[1] == cc("TR"));
    CHECK(top[2] == cc("RU"));
    CHECK(fm.counts.at({cc("RO"), cc("TR")}) == 308);
    CHECK(fm.coverage_pct(1000) == doctest::Approx(100.0));
    CHECK(FlowMatrix{}.coverage_pct(10) == 0.0);
}

TEST_CASE("country rates") {
    const std::vector<CountryCounts> counts = {{cc("FI"), 100, 4, 50, 2, 10, 1}, {cc("RO"), 10, 1, 20, 1, 5, 0}};
    const auto rows = country_rates(counts);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].country == cc("FI"));
    CHECK(rows[0].pct_traceroutes == doctest::Approx(4.0));
    CHECK(rows[0].pct_tracker_ips == doctest::Approx(10.0));
    CHECK(rows[1].pct_traceroutes == doctest::Approx(10.0));
    CHECK_THROWS_AS(country_rates({{cc("DE"), 0, 0, 1, 0, 1, 0}}), ZeroTotal);
    const auto again = parse_rates_csv(rates_to_csv(rows));
    REQUIRE(again.size() == rows.size());
    CHECK(again[0].pct_ips == doctest::Approx(rows[0].pct_ips));
}

TEST_CASE("property: country rates ignore input order") {
    testsupport::Rng rng(45);
    const auto codes = eu_members();
    for (int i = 0; i < 200; ++i) {
        std::vector<CountryCounts> counts;
        for (const auto& c : codes) {
            if (!rng.chance(0.6)) continue;
            CountryCounts k{c};
            k.traceroutes_total = static_cast<std::size_t>(rng.integer(1, 500));
            k.traceroutes_non_adequate = static_cast<std::size_t>(rng.integer(0, 3)) * k.traceroutes_total / 10;
            k.ips_total = static_cast<std::size_t>(rng.integer(1, 500));
            k.ips_non_adequate = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(k.ips_total)));
            k.tracker_ips_total = static_cast<std::size_t>(rng.integer(1, 50));
            k.tracker_ips_non_adequate = static_cast<std::size_t>(rng.integer(0, 1));
            counts.push_back(k);
        }
        const auto a = country_rates(counts);
        std::shuffle(counts.begin(), counts.end(), rng.engine());
        const auto b = country_rates(counts);
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            REQUIRE(a[j].country == b[j].country);
            REQUIRE(a[j].mean() == b[j].mean());
        }
    }
}

TEST_CASE("latency CDF") {
    const auto cdf = latency_cdf({3.0, 1.0, 2.0, 2.0});
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == CdfPoint{1.0, 0.25});
    CHECK(cdf[1] == CdfPoint{2.0, 0.75});
    CHECK(cdf[2] == CdfPoint{3.0, 1.0});
    CHECK(cdf_at(cdf, 0.5) == 0.0);
    CHECK(cdf_at(cdf, 2.0) == 0.75);
    CHECK(cdf_at(cdf, 2.5) == 0.75);
    CHECK(cdf_at(cdf, 10.0) == 1.0);
    CHECK_THROWS_AS(latency_cdf({}), EmptyInput);
}

TEST_CASE("property: CDF is a non-decreasing step function ending at one") {
    testsupport::Rng rng(46);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v(static_cast<std::size_t>(rng.integer(1, 200)));
        for (auto& x : v) x = std::round(rng.uniform(0.0, 300.0));
        const auto cdf = latency_cdf(v);
        REQUIRE(cdf.back().f == 1.0);
        for (std::size_t j = 1; j < cdf.size(); ++j) {
            REQUIRE(cdf[j].x > cdf[j - 1].x);
            REQUIRE(cdf[j].f > cdf[j - 1].f);
        }
        const double probe = rng.uniform(0.0, 300.0);
        const auto below = static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x <= probe; }));
        REQUIRE(cdf_at(cdf, probe) == doctest::Approx(below / static_cast<double>(v.size())));
    }
}

TEST_CASE("cookie summary counts distinct cookies and sites") {
    const auto site_a = dn("a.example"), site_b = dn("b.example");
    const std::vector<CookieObservation> obs = {
        {site_a, Cookie{"_ga", "GA1.1.1", dn("a.example")}},
        {site_a, Cookie{"_ga", "GA1.1.1", dn("a.example")}},  // same cookie from another vantage
        {site_b, Cookie{"_ga", "GA1.1.2", dn("b.example")}},
        {site_b, Cookie{"_fbp", "fb.1.2", dn("b.example")}},
        {site_b, Cookie{"sid", "q8Zr2LmX0pW7vB4nT6yK", dn("b.example")}},
        {site_b, Cookie{"pref", "dark", dn("b.example")}}};
    const auto rows = cookie_summary(obs, default_cookie_rules());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].pattern == "_ga");
    CHECK(rows[0].cookie_count == 2);
    CHECK(rows[0].website_count == 2);
    CHECK(rows[1].pattern == "_fbp");
    CHECK(rows[1].website_count == 1);
    CHECK(rows[2].pattern == "(high-entropy)");
    CHECK(rows[2].cookie_count == 1);
}

TEST_CASE("category counts") {
    const std::map<DomainName, std::string> cats = {{dn("a.example"), "Arts"}, {dn("b.example"), "Arts"},
                                                    {dn("c.example"), "Computers"}};
    const auto counts = category_counts({dn("a.example"), dn("b.example"), dn("a.example"), dn("z.example")}, cats);
    CHECK(counts.at("Arts") == 2);
    CHECK(counts.at(std::string(kUncategorized)) == 1);
    CHECK_FALSE(counts.contains("Computers"));
    CHECK(parse_categories_csv("site,category\nwww.a.example,News\n").at(dn("a.example")) == "News");
}

}  // TEST_SUITE
