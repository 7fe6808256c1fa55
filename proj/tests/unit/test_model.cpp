#include "doctest.h"

#include "dlaudit/country.hpp"
#include "dlaudit/csv.hpp"
#include "dlaudit/date.hpp"
#include "dlaudit/error.hpp"
#include "dlaudit/ip.hpp"
#include "dlaudit/model.hpp"
#include "support.hpp"

using namespace dlaudit;
using testsupport::cc;

TEST_SUITE("model") {

TEST_CASE("country codes are two uppercase letters") {
    CHECK(CountryCode::from("DE").str() == "DE");
    CHECK_FALSE(CountryCode::try_from("de"));
    CHECK_FALSE(CountryCode::try_from("DEU"));
    CHECK_FALSE(CountryCode::try_from(""));
    CHECK_THROWS_AS(CountryCode::from("x1"), PreconditionError);
    CHECK(cc("AT") < cc("BE"));
}

TEST_CASE("normalize_country accepts codes in any case and English names") {
    CHECK(normalize_country("de") == cc("DE"));
    CHECK(normalize_country(" Germany ") == cc("DE"));
    CHECK(normalize_country("united states") == cc("US"));
    CHECK(normalize_country("EL") == cc("GR"));
    CHECK(normalize_country("UK") == cc("GB"));
    CHECK_FALSE(normalize_country("ZZ"));
    CHECK_FALSE(normalize_country("Atlantis"));
}

TEST_CASE("EU membership") {
    CHECK(eu_members().size() == 27);
    CHECK(is_eu_member(cc("HR")));
    CHECK_FALSE(is_eu_member(cc("GB")));
    CHECK_FALSE(is_eu_member(cc("CH")));
}

TEST_CASE("Ascp requires a positive ASN") {
    CHECK(Ascp::make(3320, cc("DE")).to_string() == "AS3320/DE");
    CHECK_THROWS_AS(Ascp::make(0, cc("DE")), PreconditionError);
}

TEST_CASE("GeoPoint ranges") {
    CHECK_NOTHROW(GeoPoint::make(90.0, -180.0));
    CHECK_THROWS_AS(GeoPoint::make(90.5, 0.0), PreconditionError);
    CHECK_THROWS_AS(GeoPoint::make(0.0, 181.0), PreconditionError);
    CHECK_THROWS_AS(GeoPoint::make(std::nan(""), 0.0), PreconditionError);
}

TEST_CASE("GeoRecord invariants") {
    const auto a = IpAddress::from("1.2.3.4");
    CHECK_THROWS_AS(GeoRecord::make(a, cc("TH"), std::nullopt, Granularity::City), PreconditionError);
    CHECK_THROWS_AS(GeoRecord::make(a, cc("TH"), std::nullopt, Granularity::None), PreconditionError);
    CHECK_NOTHROW(GeoRecord::make(a, cc("US"), std::nullopt, Granularity::Country));
    CHECK_NOTHROW(GeoRecord::make(a, std::nullopt, std::nullopt, Granularity::None));
    CHECK(parse_granularity("City") == Granularity::City);
    CHECK_FALSE(parse_granularity("street"));
}

TEST_CASE("IP addresses parse, print and order") {
    const auto v4 = IpAddress::from("192.0.2.10");
    CHECK(v4.family() == IpAddress::Family::V4);
    CHECK(v4.to_string() == "192.0.2.10");
    const auto v6 = IpAddress::from("2001:db8::1");
    CHECK(v6.family() == IpAddress::Family::V6);
    CHECK(v6.to_string() == "2001:db8::1");
    CHECK(v4 < v6);
    CHECK(IpAddress::from("10.0.0.2") < IpAddress::from("10.0.0.10"));
    CHECK_FALSE(IpAddress::parse("256.1.1.1"));
    CHECK_FALSE(IpAddress::parse("1.2.3"));
    CHECK_FALSE(IpAddress::parse("example.com"));
    CHECK(v4.masked(24).to_string() == "192.0.2.0");
}

TEST_CASE("IP prefixes") {
    const auto p = IpPrefix::parse("10.1.0.0/16");
    REQUIRE(p);
    CHECK(p->contains(IpAddress::from("10.1.200.3")));
    CHECK_FALSE(p->contains(IpAddress::from("10.2.0.1")));
    CHECK_FALSE(p->contains(IpAddress::from("::1")));
    CHECK(IpPrefix::parse("1.2.3.4")->length == 32);
    CHECK_FALSE(IpPrefix::parse("10.0.0.0/33"));
}

TEST_CASE("IP round-trip property") {
    testsupport::Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto a = rng.ipv4();
        CHECK(IpAddress::from(a.to_string()) == a);
    }
}

TEST_CASE("domain names and registrable domains") {
    const auto d = DomainName::from("WWW.News.Example.CO.UK.");
    CHECK(d.fqdn() == "www.news.example.co.uk");
    CHECK(d.tld_plus_one() == "example.co.uk");
    CHECK(d.without_www().fqdn() == "news.example.co.uk");
    CHECK(DomainName::from("a.b.example.com").tld_plus_one() == "example.com");
    CHECK(DomainName::from("localhost").tld_plus_one() == "localhost");
    const auto abc = DomainName::from("a.b.example.com");
    const auto sfx = abc.suffixes_to_registrable();
    REQUIRE(sfx.size() == 3);
    CHECK(sfx[0] == "a.b.example.com");
    CHECK(sfx[2] == "example.com");
    CHECK_FALSE(DomainName::parse(""));
    CHECK_FALSE(DomainName::parse("bad_label.com"));
    CHECK_FALSE(DomainName::parse("-x.com"));
    CHECK(DomainName::from("www.com").without_www().fqdn() == "www.com");
}

TEST_CASE("dates") {
    CHECK(Date::parse("2022-09-15").to_string() == "2022-09-15");
    CHECK_FALSE(Date::try_parse("2022-02-30"));
    CHECK_FALSE(Date::try_parse("2022-9-15"));
    CHECK(Date::parse("2020-07-16") < Date::parse("2020-07-17"));
    const auto t = parse_timestamp("2022-08-20T08:00:00Z");
    REQUIRE(t);
    CHECK(format_timestamp(*t) == "2022-08-20T08:00:00Z");
    CHECK(parse_timestamp("2022-08-20T08:00:00.250+00:00") == t);
    CHECK_FALSE(parse_timestamp("yesterday"));
}

TEST_CASE("csv tables") {
    const auto t = csv::parse("a,b\n# comment\n1,\"x, y\"\n\n2,\"say \"\"hi\"\"\"\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].fields[1] == "x, y");
    CHECK(t.rows[1].fields[1] == "say \"hi\"");
    CHECK(t.rows[1].line == 5);
    CHECK(t.column("b") == 1u);
    CHECK_FALSE(t.column("c"));
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::join({"x", "y\"z"}) == "x,\"y\"\"z\"");
}

}  // TEST_SUITE
