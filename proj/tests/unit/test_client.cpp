#include "doctest.h"

#include <deque>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "dlaudit/client.hpp"
#include "support.hpp"

using namespace dlaudit;
using testsupport::cc;
using json = nlohmann::json;

namespace {

MeasurementSpec spec_from_fixture() {
    const auto j = json::parse(testsupport::slurp(testsupport::fixture_dir() / "replay" / "spec.json"));
    MeasurementSpec s;
    for (const auto& t : j["spec"]["targets"]) s.targets.push_back(t.get<std::string>());
    for (const auto& p : j["spec"]["probes"]) {
        s.probes.push_back(Probe{p["id"].get<std::uint64_t>(),
                                 Ascp::make(p["asn"].get<std::uint32_t>(), cc(p["country"].get<std::string>().c_str())),
                                 std::nullopt, true});
    }
    s.packets = j["spec"]["packets"].get<int>();
    s.timeout_ms = j["spec"]["timeout_ms"].get<int>();
    return s;
}

// Scripted HTTP: responses are served per path in order; every call is logged.
class MockHttp final : public HttpClient {
public:
    std::map<std::string, std::deque<HttpResponse>> script;
    std::vector<std::string> calls;
    std::vector<std::string> bodies;

    HttpResponse get(const std::string& path) override { return next("GET " + path); }
    HttpResponse post(const std::string& path, const std::string& body) override {
        bodies.push_back(body);
        return next("POST " + path);
    }

private:
    HttpResponse next(const std::string& key) {
        calls.push_back(key);
        auto& q = script[key];
        if (q.empty()) return HttpResponse{404, "{\"detail\":\"not scripted\"}", {}};
        auto r = q.front();
        if (q.size() > 1) q.pop_front();
        return r;
    }
};

std::string ripe_result(int prb, const std::string& dst, double rtt) {
    json r = {{"msm_id", 777},
              {"prb_id", prb},
              {"dst_addr", dst},
              {"dst_name", dst},
              {"timestamp", 1661000000},
              {"result",
               json::array({{{"hop", 1}, {"result", json::array({{{"from", "10.0.0.1"}, {"rtt", 1.5}}})}},
                            {{"hop", 2}, {"result", json::array({{{"from", dst}, {"rtt", rtt}}, {{"x", "*"}}})}}})}};
    return r.dump();
}

LiveConfig no_sleep(std::vector<std::chrono::milliseconds>* slept) {
    LiveConfig c;
    c.retry_sleep = std::chrono::milliseconds(250);
    c.max_attempts = 3;
    c.sleep = [slept](std::chrono::milliseconds ms) { slept->push_back(ms); };
    return c;
}

}  // namespace

TEST_SUITE("client") {

TEST_CASE("proxy URL") {
    const auto h = ProxyHandle::make("token", cc("DE"), "pw", "u1", 22225);
    CHECK(build_proxy_url(h) == "http://lum-auth-token-country-de:pw@pmgr-customer-u1.zproxy.lum-superproxy.io:22225");
    CHECK(build_proxy_url(ProxyHandle::make("t", cc("FR"), "x", "u", 1)).find("country-fr:") != std::string::npos);
    CHECK_THROWS_AS(ProxyHandle::make("t", cc("FR"), "x", "u", 0), PreconditionError);
    CHECK_THROWS_AS(ProxyHandle::make("t", cc("FR"), "x", "u", 65536), PreconditionError);
}

TEST_CASE("spec validation and probe selection") {
    MeasurementSpec s;
    CHECK_THROWS_AS(s.validate(), PreconditionError);
    s.targets = {"example.com"};
    CHECK_THROWS_AS(s.validate(), PreconditionError);
    s.probes = {Probe{1, Ascp::make(1, cc("DE")), std::nullopt, true}};
    CHECK_NOTHROW(s.validate());
    s.packets = 0;
    CHECK_THROWS_AS(s.validate(), PreconditionError);

    std::vector<Probe> avail;
    for (std::uint64_t id = 10; id > 0; --id) {
        avail.push_back(Probe{id, Ascp::make(100 + static_cast<std::uint32_t>(id), cc(id % 2 ? "US" : "TR")),
                              std::nullopt, id != 3});
    }
    const auto sel = select_probes(avail, {cc("US")});
    REQUIRE(sel.size() == 3);
    CHECK(sel[0].id == 1);
    CHECK(sel[1].id == 5);  // 3 is disconnected
    CHECK(sel[2].id == 7);
}

TEST_CASE("replay transport") {
    ReplayTransport t(testsupport::fixture_dir() / "replay");
    const auto spec = spec_from_fixture();
    const auto expected = json::parse(testsupport::slurp(testsupport::fixture_dir() / "replay" / "spec.json"))["id"];
    const auto id = t.create_measurement(spec);
    CHECK(id == expected.get<std::string>());
    CHECK(t.create_measurement(spec) == id);
    auto other = spec;
    other.packets = 4;
    CHECK(ReplayTransport::id_for(other) != id);

    const auto body = t.fetch_results(id);
    CHECK(body == testsupport::slurp(testsupport::fixture_dir() / "replay" / (id + ".jsonl")));
    CHECK(t.fetch_results(id) == body);
    const auto parsed = parse_traceroutes(body);
    CHECK(parsed.errors.empty());
    CHECK(parsed.records.size() == 20);
    CHECK_THROWS_AS(t.fetch_results("replay-0000000000000000"), NotFound);
    CHECK_THROWS_AS(t.fetch_results("../spec"), NotFound);
}

TEST_CASE("live transport retries 429 with the configured sleep") {
    auto http = std::make_unique<MockHttp>();
    auto* mock = http.get();
    mock->script["POST /api/v2/measurements/"] = {HttpResponse{429, "{}", {}}, HttpResponse{429, "{}", {}},
                                                  HttpResponse{201, "{\"measurements\":[41,42]}", {}}};
    std::vector<std::chrono::milliseconds> slept;
    LiveTransport t(std::move(http), no_sleep(&slept));
    auto spec = spec_from_fixture();
    spec.targets.resize(2);
    CHECK(t.create_measurement(spec) == "41,42");
    CHECK(slept == std::vector<std::chrono::milliseconds>(2, std::chrono::milliseconds(250)));
    CHECK(t.requests_sent() == 3);
    const auto body = json::parse(mock->bodies.back());
    CHECK(body["definitions"].size() == 2);
    CHECK(body["definitions"][0]["packets"] == 3);
    CHECK(body["definitions"][0]["timeout"] == 4000);
    CHECK(body["probes"][0]["value"] == "1000,1001,1002");

    mock->script["POST /api/v2/measurements/"] = {HttpResponse{429, "{}", {}}};
    CHECK_THROWS_AS(t.create_measurement(spec), TransportError);
}

TEST_CASE("live transport surfaces quota errors verbatim") {
    auto http = std::make_unique<MockHttp>();
    http->script["POST /api/v2/measurements/"] = {
        HttpResponse{403, "{\"error\":{\"detail\":\"You do not have enough credit to schedule this measurement.\"}}", {}}};
    std::vector<std::chrono::milliseconds> slept;
    LiveTransport t(std::move(http), no_sleep(&slept));
    try {
        t.create_measurement(spec_from_fixture());
        FAIL("expected QuotaExceeded");
    } catch (const QuotaExceeded& e) {
        CHECK(std::string(e.what()).find("enough credit") != std::string::npos);
        CHECK(e.status == 403);
    }
}

TEST_CASE("live transport paginates results in order") {
    auto http = std::make_unique<MockHttp>();
    auto* mock = http.get();
    mock->script["GET /api/v2/measurements/777/"] = {
        HttpResponse{200, "{\"status\":{\"name\":\"Stopped\"},\"description\":\"dlaudit destination\"}", {}}};
    mock->script["GET /api/v2/measurements/777/results/?format=json"] = {HttpResponse{
        200,
        json{{"results", json::array({json::parse(ripe_result(1000, "192.0.2.1", 20.0)),
                                      json::parse(ripe_result(1001, "192.0.2.2", 30.0))})},
             {"next", "https://atlas.example/api/v2/measurements/777/results/?format=json&page=2"}}
            .dump(),
        {}}};
    mock->script["GET /api/v2/measurements/777/results/?format=json&page=2"] = {
        HttpResponse{200, json{{"results", json::array({json::parse(ripe_result(1002, "192.0.2.3", 40.0))})},
                               {"next", nullptr}}.dump(),
                     {}}};
    mock->script["GET /api/v2/probes/1002/"] = {HttpResponse{
        200, "{\"asn_v4\":64512,\"country_code\":\"FI\",\"geometry\":{\"coordinates\":[24.9,60.2]},"
             "\"status\":{\"name\":\"Connected\"}}",
        {}}};
    std::vector<std::chrono::milliseconds> slept;
    LiveTransport t(std::move(http), no_sleep(&slept));
    // Probes 1000 and 1001 are known from the measurement spec; 1002 is looked up.
    auto spec = spec_from_fixture();
    spec.probes.erase(spec.probes.begin() + 2, spec.probes.end());
    mock->script["POST /api/v2/measurements/"] = {HttpResponse{201, "{\"measurements\":[777]}", {}}};
    REQUIRE(t.create_measurement(spec) == "777");

    const auto out = t.fetch_results("777");
    const auto parsed = parse_traceroutes(out);
    REQUIRE(parsed.errors.empty());
    REQUIRE(parsed.records.size() == 3);
    CHECK(parsed.records[0].dst_ip == testsupport::ip("192.0.2.1"));
    CHECK(parsed.records[2].dst_ip == testsupport::ip("192.0.2.3"));
    CHECK(parsed.records[2].source == Ascp::make(64512, cc("FI")));
    CHECK(parsed.records[2].probe_point);
    CHECK(parsed.records[0].stage_tag == StageTag::DestinationBased);
    CHECK(parsed.records[0].measurement_id == "777");

    CHECK_THROWS_AS(t.fetch_results("404"), NotFound);
    mock->script["GET /api/v2/measurements/5/"] = {HttpResponse{200, "{\"status\":{\"name\":\"Ongoing\"}}", {}}};
    CHECK_THROWS_AS(t.fetch_results("5"), Incomplete);
}

TEST_CASE("RIPE result conversion") {
    const Probe p{1, Ascp::make(3320, cc("DE")), GeoPoint::make(52.5, 13.4), true};
    const auto rec = convert_ripe_result(ripe_result(1, "192.0.2.9", 12.0), p, "m", StageTag::SourceBased);
    REQUIRE(rec);
    REQUIRE(rec->hops.size() == 2);
    CHECK(rec->hops[1].replies.size() == 2);
    CHECK_FALSE(rec->hops[1].replies[1].from_ip);
    CHECK(parse_traceroutes(serialize_traceroute(*rec)).records.at(0) == *rec);
    CHECK_FALSE(convert_ripe_result("{\"prb_id\":1}", p, "m", StageTag::SourceBased));
    CHECK_FALSE(convert_ripe_result("not json", p, "m", StageTag::SourceBased));
}

TEST_CASE("bounded fan-out keeps request order") {
    ReplayTransport t(testsupport::fixture_dir() / "replay");
    std::vector<MeasurementSpec> specs;
    for (int i = 0; i < 9; ++i) {
        auto s = spec_from_fixture();
        s.packets = 1 + i;
        specs.push_back(s);
    }
    const auto ids = create_all(t, specs, 4);
    REQUIRE(ids.size() == specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) CHECK(ids[i] == ReplayTransport::id_for(specs[i]));
    const auto id = ReplayTransport::id_for(spec_from_fixture());
    const auto one = t.fetch_results(id);
    CHECK(fetch_all(t, {id, id, id}, 2) == one + one + one);
}

TEST_CASE("httplib client against a local server") {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/api/v2/measurements/", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        res.status = 201;
        res.set_content("{\"measurements\":[9]}", "application/json");
    });
    server.Get("/api/v2/measurements/9/", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"status\":{\"name\":\"Stopped\"},\"description\":\"dlaudit source\"}", "application/json");
    });
    server.Get("/api/v2/measurements/9/results/", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("[" + ripe_result(1000, "192.0.2.50", 15.0) + "]", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LiveTransport t(make_http_client("http://127.0.0.1:" + std::to_string(port), "secret"));
    const auto id = t.create_measurement(spec_from_fixture());
    const auto out = t.fetch_results(id);
    server.stop();
    th.join();

    CHECK(id == "9");
    CHECK(seen_auth == "Key secret");
    const auto parsed = parse_traceroutes(out);
    REQUIRE(parsed.records.size() == 1);
    CHECK(parsed.records[0].source == Ascp::make(50000, cc("RO")));
    CHECK(parsed.records[0].stage_tag == StageTag::SourceBased);
}

}  // TEST_SUITE
