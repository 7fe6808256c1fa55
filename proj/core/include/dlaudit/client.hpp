#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dlaudit/error.hpp"
#include "dlaudit/ingest.hpp"
#include "dlaudit/model.hpp"

namespace dlaudit {

// ---------------------------------------------------------------------------
// Proxy handler
// ---------------------------------------------------------------------------

struct ProxyHandle {
    std::string token;
    CountryCode country;
    std::string passphrase;
    std::string user_id;
    int port = 22225;

    /// Throws PreconditionError when the port is outside [1, 65535].
    static ProxyHandle make(std::string token, CountryCode country, std::string passphrase, std::string user_id,
                            int port);
};

/// The only place the passphrase is ever rendered.
std::string build_proxy_url(const ProxyHandle& h);

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

struct Probe {
    std::uint64_t id = 0;
    Ascp ascp;
    std::optional<GeoPoint> point;
    bool connected = true;
};

struct MeasurementSpec {
    std::vector<std::string> targets;  // hostnames or IP literals
    std::vector<Probe> probes;
    int packets = 3;
    int timeout_ms = 4000;
    std::string protocol = "ICMP";
    StageTag stage = StageTag::SourceBased;

    /// Throws PreconditionError on empty targets/probes or packets < 1.
    void validate() const;
    /// Stable serialization used for hashing and request bodies.
    [[nodiscard]] std::string canonical_json() const;
};

/// Keeps connected probes only, at most `per_country` per requested country,
/// lowest probe id first.
std::vector<Probe> select_probes(const std::vector<Probe>& available, const std::set<CountryCode>& countries,
                                 std::size_t per_country = 3);

class TransportError : public Error {
public:
    TransportError(std::string message, int status);
    int status;  // HTTP status, or 0 for connection failures
};

/// Quota or credit exhaustion reported by the platform; the message is the
/// platform's own text.
class QuotaExceeded : public TransportError {
public:
    using TransportError::TransportError;
};

class NotFound : public Error {
public:
    explicit NotFound(std::string id);
    std::string id;
};

/// Results are not final yet; retry after the hinted delay.
class Incomplete : public Error {
public:
    Incomplete(std::string id, std::chrono::milliseconds retry_after);
    std::string id;
    std::chrono::milliseconds retry_after;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string create_measurement(const MeasurementSpec& spec) = 0;
    /// Returns ingest-schema traceroute JSON lines. Idempotent.
    virtual std::string fetch_results(const std::string& measurement_id) = 0;
};

/// Offline transport over `<dir>/<measurement_id>.jsonl`.
class ReplayTransport final : public Transport {
public:
    explicit ReplayTransport(std::filesystem::path dir);
    /// Deterministic id derived from the SHA-256 of the canonical spec.
    std::string create_measurement(const MeasurementSpec& spec) override;
    std::string fetch_results(const std::string& measurement_id) override;

    static std::string id_for(const MeasurementSpec& spec);

private:
    std::filesystem::path dir_;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;
};

/// Minimal HTTP seam so the live transport can be driven by a mock.
class HttpClient {
public:
    virtual ~HttpClient() = default;
    virtual HttpResponse get(const std::string& path_and_query) = 0;
    virtual HttpResponse post(const std::string& path, const std::string& json_body) = 0;
};

/// HttpClient backed by cpp-httplib. `base_url` is scheme://host[:port].
std::unique_ptr<HttpClient> make_http_client(const std::string& base_url, const std::string& api_key);

struct LiveConfig {
    std::chrono::milliseconds retry_sleep{1000};
    int max_attempts = 5;
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

/// Transport over the RIPE Atlas v2 REST API.
class LiveTransport final : public Transport {
public:
    LiveTransport(std::unique_ptr<HttpClient> http, LiveConfig config = {});
    /// One POST per spec. Multi-target specs yield comma-joined ids.
    std::string create_measurement(const MeasurementSpec& spec) override;
    std::string fetch_results(const std::string& measurement_id) override;

    [[nodiscard]] int requests_sent() const { return requests_.load(); }

private:
    HttpResponse send(const std::function<HttpResponse()>& request);
    std::string fetch_one(const std::string& id);
    Probe probe(std::uint64_t id);

    std::unique_ptr<HttpClient> http_;
    LiveConfig config_;
    std::mutex probes_mutex_;
    std::map<std::uint64_t, Probe> probes_;
    std::atomic<int> requests_{0};
};

/// Converts one RIPE Atlas traceroute result object to an ingest record.
/// Returns nullopt for results without a resolved destination address.
std::optional<TracerouteRecord> convert_ripe_result(const std::string& result_json, const Probe& probe,
                                                    const std::string& measurement_id, StageTag stage);

/// Creates every spec with at most `max_in_flight` concurrent requests.
/// Ids come back in spec order regardless of completion order.
std::vector<std::string> create_all(Transport& t, const std::vector<MeasurementSpec>& specs,
                                    unsigned max_in_flight = 4);

/// Fetches every id with bounded concurrency and concatenates in id order.
std::string fetch_all(Transport& t, const std::vector<std::string>& ids, unsigned max_in_flight = 4);

}  // namespace dlaudit
