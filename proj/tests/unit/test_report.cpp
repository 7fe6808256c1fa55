#include "doctest.h"

#include "json.hpp"

#include "dlaudit/report.hpp"
#include "support.hpp"

using namespace dlaudit;
using testsupport::cc;
using testsupport::dn;
using testsupport::ip;
using json = nlohmann::json;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
        const auto nl = s.find('\n', start);
        out.push_back(s.substr(start, nl - start));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return out;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("funnel csv") {
    FunnelReport f;
    f.geodb = {"geodb", 10, 0, 4, 6, 6};
    f.source = {"source", 20, 2, 10, 8, 5};
    f.destination = {"destination", 5, 1, 1, 3, 3};
    f.rdns = {"rdns", 3, 0, 1, 2, 2};
    f.rdns_breakdown = {1, 0, 1, 1, 0};
    f.final_measurements = 2;
    f.final_unique_ips = 2;
    CHECK(f.conserved());
    const auto rows = lines_of(funnel_csv(f));
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].rfind("stage,input,excluded_unresponsive,excluded_adequate_or_gate,passed,unique_ips", 0) == 0);
    CHECK(rows[1].rfind("geodb,10,0,4,6,6", 0) == 0);
    CHECK(rows[4].rfind("rdns,3,0,1,2,2,1,0,1,1,0", 0) == 0);
    CHECK(rows[5].rfind("final,2,0,0,2,2", 0) == 0);
    f.source.passed = 9;
    CHECK_FALSE(f.conserved());
}

TEST_CASE("metrics json pools experiments") {
    ValidationMetrics us{170, 0, 0, 30, {}, {}, {}};
    us.finalize();
    ValidationMetrics aws{0, 0, 1000, 0, {}, {}, {}};
    aws.finalize();
    const auto j = json::parse(metrics_json({{"us", us}, {"aws", aws}}));
    CHECK(j.dump().find("\"us\"") != std::string::npos);
    CHECK(j.dump().find("pooled") != std::string::npos);
    const auto single = json::parse(metrics_json({{"us", us}}));
    CHECK(single.dump().find("pooled") == std::string::npos);
}

TEST_CASE("small writers") {
    CHECK(categories_csv({{"Arts", 2}, {"News", 5}}) == "category,sites\nNews,5\nArts,2\n");
    const std::vector<CookieSummaryRow> cookies = {{"_ga", "Google Analytics", "analytics", 3, 2}};
    CHECK(lines_of(cookies_csv(cookies)).at(1) == "_ga,Google Analytics,analytics,3,2");

    FlowMatrix fm = flow_matrix({{cc("RO"), cc("TR")}, {cc("RO"), cc("TR")}, {cc("FI"), cc("RU")}});
    const auto flows = lines_of(flows_csv(fm));
    CHECK(flows.at(0) == "source_country,destination_country,count");
    CHECK(flows.at(1) == "FI,RU,1");
    CHECK(flows.at(2) == "RO,TR,2");

    FinalSample s;
    s.instances = {Instance{dn("a.example"), Ascp::make(5, cc("DE")), ip("192.0.2.1")}};
    CHECK(lines_of(instances_csv(s)).at(1) == "a.example,5,DE,192.0.2.1");

    const std::vector<ReviewItem> review = {{dn("a.example"), dn("t.example"), "first_party_tracker", "AS1"}};
    CHECK(lines_of(review_queue_csv(review)).at(1) == "a.example,t.example,first_party_tracker,AS1");
}

TEST_CASE("cdf outputs") {
    const auto all = latency_cdf({1.0, 2.0, 3.0});
    const auto confirmed = latency_cdf({2.0});
    const auto csv = lines_of(cdf_csv(all, confirmed));
    CHECK(csv.at(0) == "series,x_ms,F");
    CHECK(csv.size() >= 5);
    const auto svg = cdf_svg(all, confirmed, "Source <stage> & latency");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("&lt;stage&gt; &amp; latency") != std::string::npos);
    CHECK(cdf_svg({}, {}, "empty").find("</svg>") != std::string::npos);
}

TEST_CASE("write_file creates directories and reports IO errors") {
    const auto dir = testsupport::scratch_dir("report-write");
    write_file(dir / "a" / "b.txt", "hello");
    CHECK(testsupport::slurp(dir / "a" / "b.txt") == "hello");
    std::filesystem::create_directories(dir / "blocked");
    CHECK_THROWS_AS(write_file(dir / "blocked", "x"), IoError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
