#include "dlaudit/client.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <httplib.h>

#include "text.hpp"

namespace dlaudit {

namespace {

using json = nlohmann::json;

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

bool is_ipv6_literal(const std::string& target) {
    const auto ip = IpAddress::parse(target);
    return ip && target.find(':') != std::string::npos;
}

// Strips scheme and authority from an absolute `next` link.
std::string path_of(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) return url;
    const auto slash = url.find('/', scheme + 3);
    return slash == std::string::npos ? "/" : url.substr(slash);
}

std::string error_detail(const std::string& body) {
    const auto j = json::parse(body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_object()) {
        const auto& e = j["error"];
        if (e.contains("detail") && e["detail"].is_string()) return e["detail"].get<std::string>();
        if (e.contains("title") && e["title"].is_string()) return e["title"].get<std::string>();
    }
    return body;
}

bool mentions_quota(const std::string& body) {
    const auto lower = text::to_lower(body);
    return lower.find("quota") != std::string::npos || lower.find("credit") != std::string::npos;
}

// Runs fn(i) for i in [0, n) with at most k concurrent calls.
template <typename Fn>
void bounded(std::size_t n, unsigned k, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, k), n);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

class HttplibClient final : public HttpClient {
public:
    HttplibClient(std::string base_url, std::string api_key)
        : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

    HttpResponse get(const std::string& path_and_query) override {
        auto cli = client();
        return convert(cli.Get(path_and_query, headers()));
    }

    HttpResponse post(const std::string& path, const std::string& json_body) override {
        auto cli = client();
        return convert(cli.Post(path, headers(), json_body, "application/json"));
    }

private:
    // A client per call keeps concurrent requests independent.
    httplib::Client client() const {
        httplib::Client cli(base_url_);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(60);
        return cli;
    }

    httplib::Headers headers() const {
        httplib::Headers h{{"Accept", "application/json"}};
        if (!api_key_.empty()) h.emplace("Authorization", "Key " + api_key_);
        return h;
    }

    static HttpResponse convert(const httplib::Result& res) {
        if (!res) throw TransportError("connection failed: " + httplib::to_string(res.error()), 0);
        HttpResponse out{res->status, res->body, {}};
        for (const auto& [k, v] : res->headers) out.headers[text::to_lower(k)] = v;
        return out;
    }

    std::string base_url_;
    std::string api_key_;
};

}  // namespace

ProxyHandle ProxyHandle::make(std::string token, CountryCode country, std::string passphrase, std::string user_id,
                              int port) {
    if (port < 1 || port > 65535) throw PreconditionError(fmt::format("proxy port {} out of range", port));
    return ProxyHandle{std::move(token), country, std::move(passphrase), std::move(user_id), port};
}

std::string build_proxy_url(const ProxyHandle& h) {
    if (h.port < 1 || h.port > 65535) throw PreconditionError(fmt::format("proxy port {} out of range", h.port));
    return fmt::format("http://lum-auth-token-country-{}:{}@pmgr-customer-{}.zproxy.lum-superproxy.io:{}",
                       text::to_lower(h.country.str()), h.passphrase, h.user_id, h.port);
}

void MeasurementSpec::validate() const {
    if (targets.empty()) throw PreconditionError("measurement spec has no targets");
    if (probes.empty()) throw PreconditionError("measurement spec has no probes");
    if (packets < 1) throw PreconditionError("packets must be >= 1");
    if (timeout_ms < 1) throw PreconditionError("timeout_ms must be >= 1");
}

std::string MeasurementSpec::canonical_json() const {
    nlohmann::ordered_json j;
    j["targets"] = targets;
    auto probes_json = nlohmann::ordered_json::array();
    for (const auto& p : probes) {
        probes_json.push_back({{"id", p.id}, {"asn", p.ascp.asn}, {"country", p.ascp.country.str()}});
    }
    j["probes"] = probes_json;
    j["packets"] = packets;
    j["timeout_ms"] = timeout_ms;
    j["protocol"] = protocol;
    j["stage"] = to_string(stage);
    return j.dump();
}

std::vector<Probe> select_probes(const std::vector<Probe>& available, const std::set<CountryCode>& countries,
                                 std::size_t per_country) {
    std::vector<Probe> sorted;
    for (const auto& p : available) {
        if (p.connected && countries.contains(p.ascp.country)) sorted.push_back(p);
    }
    std::sort(sorted.begin(), sorted.end(), [](const Probe& a, const Probe& b) { return a.id < b.id; });
    std::map<CountryCode, std::size_t> taken;
    std::vector<Probe> out;
    for (const auto& p : sorted) {
        if (taken[p.ascp.country]++ < per_country) out.push_back(p);
    }
    return out;
}

TransportError::TransportError(std::string message, int status_code)
    : Error(std::move(message)), status(status_code) {}

NotFound::NotFound(std::string measurement_id)
    : Error("measurement not found: " + measurement_id), id(std::move(measurement_id)) {}

Incomplete::Incomplete(std::string measurement_id, std::chrono::milliseconds retry)
    : Error(fmt::format("measurement {} not finished; retry in {} ms", measurement_id, retry.count())),
      id(std::move(measurement_id)),
      retry_after(retry) {}

// ---------------------------------------------------------------------------
// Replay

ReplayTransport::ReplayTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReplayTransport::id_for(const MeasurementSpec& spec) {
    return "replay-" + sha256_hex(spec.canonical_json()).substr(0, 16);
}

std::string ReplayTransport::create_measurement(const MeasurementSpec& spec) {
    spec.validate();
    return id_for(spec);
}

std::string ReplayTransport::fetch_results(const std::string& measurement_id) {
    if (measurement_id.empty() || measurement_id.find_first_of("/\\") != std::string::npos ||
        measurement_id.find("..") != std::string::npos) {
        throw NotFound(measurement_id);
    }
    const auto path = dir_ / (measurement_id + ".jsonl");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound(measurement_id);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Live

std::unique_ptr<HttpClient> make_http_client(const std::string& base_url, const std::string& api_key) {
    return std::make_unique<HttplibClient>(base_url, api_key);
}

LiveTransport::LiveTransport(std::unique_ptr<HttpClient> http, LiveConfig config)
    : http_(std::move(http)), config_(std::move(config)) {
    if (!http_) throw PreconditionError("live transport needs an HTTP client");
    if (config_.max_attempts < 1) throw PreconditionError("max_attempts must be >= 1");
    if (!config_.sleep) config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpResponse LiveTransport::send(const std::function<HttpResponse()>& request) {
    for (int attempt = 1;; ++attempt) {
        ++requests_;
        auto res = request();
        if (res.status == 429) {
            if (attempt >= config_.max_attempts) {
                throw TransportError(fmt::format("rate limited after {} attempts", attempt), 429);
            }
            config_.sleep(config_.retry_sleep);
            continue;
        }
        if (res.status == 402 || (res.status == 403 && mentions_quota(res.body))) {
            throw QuotaExceeded(error_detail(res.body), res.status);
        }
        return res;
    }
}

std::string LiveTransport::create_measurement(const MeasurementSpec& spec) {
    spec.validate();
    json body;
    body["is_oneoff"] = true;
    body["definitions"] = json::array();
    for (const auto& t : spec.targets) {
        body["definitions"].push_back({{"target", t},
                                       {"af", is_ipv6_literal(t) ? 6 : 4},
                                       {"type", "traceroute"},
                                       {"protocol", spec.protocol},
                                       {"packets", spec.packets},
                                       {"timeout", spec.timeout_ms},
                                       {"resolve_on_probe", true},
                                       {"description", fmt::format("dlaudit {}", to_string(spec.stage))}});
    }
    std::string ids;
    for (const auto& p : spec.probes) ids += (ids.empty() ? "" : ",") + std::to_string(p.id);
    body["probes"] = json::array({{{"type", "probes"}, {"value", ids}, {"requested", spec.probes.size()}}});
    {
        std::lock_guard lock(probes_mutex_);
        for (const auto& p : spec.probes) probes_.insert_or_assign(p.id, p);
    }

    const auto payload = body.dump();
    const auto res = send([&] { return http_->post("/api/v2/measurements/", payload); });
    if (res.status < 200 || res.status >= 300) {
        throw TransportError(fmt::format("create failed ({}): {}", res.status, error_detail(res.body)), res.status);
    }
    const auto j = json::parse(res.body, nullptr, false);
    if (!j.is_object() || !j.contains("measurements") || !j["measurements"].is_array() ||
        j["measurements"].empty()) {
        throw TransportError("create response lacks measurement ids", res.status);
    }
    std::string out;
    for (const auto& id : j["measurements"]) {
        out += (out.empty() ? "" : ",") + (id.is_string() ? id.get<std::string>() : id.dump());
    }
    return out;
}

Probe LiveTransport::probe(std::uint64_t id) {
    {
        std::lock_guard lock(probes_mutex_);
        if (const auto it = probes_.find(id); it != probes_.end()) return it->second;
    }
    const auto res = send([&] { return http_->get(fmt::format("/api/v2/probes/{}/", id)); });
    if (res.status != 200) throw TransportError(fmt::format("probe {} lookup failed ({})", id, res.status), res.status);
    const auto j = json::parse(res.body, nullptr, false);
    if (!j.is_object()) throw TransportError(fmt::format("probe {} lookup returned invalid JSON", id), res.status);
    const auto asn = j.value("asn_v4", json()).is_number_unsigned() ? j["asn_v4"].get<std::uint32_t>()
                     : j.value("asn_v6", json()).is_number_unsigned() ? j["asn_v6"].get<std::uint32_t>()
                                                                       : 0u;
    const auto cc = CountryCode::try_from(j.value("country_code", std::string()));
    if (asn == 0 || !cc) throw TransportError(fmt::format("probe {} has no ASN or country", id), res.status);
    Probe p{id, Ascp::make(asn, *cc), std::nullopt, true};
    if (j.contains("geometry") && j["geometry"].is_object()) {
        const auto& c = j["geometry"].value("coordinates", json());
        if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number()) {
            const GeoPoint pt{c[1].get<double>(), c[0].get<double>()};
            if (pt.valid()) p.point = pt;
        }
    }
    if (j.contains("status") && j["status"].is_object()) p.connected = j["status"].value("name", "") == "Connected";
    std::lock_guard lock(probes_mutex_);
    return probes_.emplace(id, p).first->second;
}

std::string LiveTransport::fetch_one(const std::string& id) {
    const auto meta_res = send([&] { return http_->get(fmt::format("/api/v2/measurements/{}/", id)); });
    if (meta_res.status == 404) throw NotFound(id);
    if (meta_res.status != 200) {
        throw TransportError(fmt::format("measurement {} lookup failed ({})", id, meta_res.status), meta_res.status);
    }
    const auto meta = json::parse(meta_res.body, nullptr, false);
    std::string status;
    if (meta.is_object() && meta.contains("status") && meta["status"].is_object()) {
        status = meta["status"].value("name", "");
    }
    if (status == "Specified" || status == "Scheduled" || status == "Ongoing") throw Incomplete(id, config_.retry_sleep);
    const auto description = meta.is_object() ? meta.value("description", std::string()) : std::string();
    const auto stage =
        description.find(to_string(StageTag::DestinationBased)) != std::string::npos ? StageTag::DestinationBased : StageTag::SourceBased;

    std::string out;
    std::string next = fmt::format("/api/v2/measurements/{}/results/?format=json", id);
    while (!next.empty()) {
        const auto res = send([&] { return http_->get(next); });
        if (res.status == 404) throw NotFound(id);
        if (res.status != 200) throw TransportError(fmt::format("results for {} failed ({})", id, res.status), res.status);
        const auto page = json::parse(res.body, nullptr, false);
        const json* results = nullptr;
        next.clear();
        if (page.is_array()) {
            results = &page;
        } else if (page.is_object() && page.contains("results") && page["results"].is_array()) {
            results = &page["results"];
            if (page.contains("next") && page["next"].is_string()) next = path_of(page["next"].get<std::string>());
        } else {
            throw TransportError(fmt::format("results for {} are not a JSON list", id), res.status);
        }
        for (const auto& r : *results) {
            if (!r.is_object() || !r.contains("prb_id") || !r["prb_id"].is_number_unsigned()) continue;
            const auto p = probe(r["prb_id"].get<std::uint64_t>());
            if (auto rec = convert_ripe_result(r.dump(), p, id, stage)) out += serialize_traceroute(*rec) + "\n";
        }
    }
    return out;
}

std::string LiveTransport::fetch_results(const std::string& measurement_id) {
    std::string out;
    for (const auto& id : text::split(measurement_id, ',')) out += fetch_one(std::string(id));
    return out;
}

std::optional<TracerouteRecord> convert_ripe_result(const std::string& result_json, const Probe& probe,
                                                    const std::string& measurement_id, StageTag stage) {
    const auto j = json::parse(result_json, nullptr, false);
    if (!j.is_object()) return std::nullopt;
    const auto dst = IpAddress::parse(j.value("dst_addr", std::string()));
    if (!dst) return std::nullopt;

    TraceTarget target = *dst;
    const auto name = j.value("dst_name", std::string());
    if (const auto ip = IpAddress::parse(name)) {
        target = *ip;
    } else if (const auto d = DomainName::parse(name)) {
        target = *d;
    }

    std::vector<Hop> hops;
    if (j.contains("result") && j["result"].is_array()) {
        for (const auto& h : j["result"]) {
            if (!h.is_object() || h.contains("error") || !h.contains("hop") || !h["hop"].is_number_integer()) continue;
            Hop hop{h["hop"].get<int>(), {}};
            if (hop.index < 1 || (!hops.empty() && hop.index <= hops.back().index)) continue;
            if (h.contains("result") && h["result"].is_array()) {
                for (const auto& r : h["result"]) {
                    Reply reply;
                    if (r.is_object() && r.contains("from") && r["from"].is_string()) {
                        reply.from_ip = IpAddress::parse(r["from"].get<std::string>());
                    }
                    // A zero or negative rtt is a platform artifact and carries no timing.
                    if (r.is_object() && r.contains("rtt") && r["rtt"].is_number() && r["rtt"].get<double>() > 0) {
                        reply.rtt_ms = r["rtt"].get<double>();
                    }
                    hop.replies.push_back(reply);
                }
            }
            hops.push_back(std::move(hop));
        }
    }

    TracerouteRecord rec{measurement_id,
                         probe.ascp,
                         probe.point,
                         std::move(target),
                         *dst,
                         std::move(hops),
                         stage,
                         Timestamp{std::chrono::seconds{j.value("timestamp", std::int64_t{0})}}};
    if (j.contains("msm_id") && j["msm_id"].is_number_integer()) rec.measurement_id = j["msm_id"].dump();
    return rec;
}

std::vector<std::string> create_all(Transport& t, const std::vector<MeasurementSpec>& specs, unsigned max_in_flight) {
    std::vector<std::string> ids(specs.size());
    bounded(specs.size(), max_in_flight, [&](std::size_t i) { ids[i] = t.create_measurement(specs[i]); });
    return ids;
}

std::string fetch_all(Transport& t, const std::vector<std::string>& ids, unsigned max_in_flight) {
    std::vector<std::string> parts(ids.size());
    bounded(ids.size(), max_in_flight, [&](std::size_t i) { parts[i] = t.fetch_results(ids[i]); });
    std::string out;
    for (const auto& p : parts) out += p;
    return out;
}

}  // namespace dlaudit
