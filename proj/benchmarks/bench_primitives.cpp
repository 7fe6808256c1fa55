#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dlaudit/geodesy.hpp"
#include "dlaudit/ingest.hpp"
#include "dlaudit/latency.hpp"
#include "dlaudit/stats.hpp"

using namespace dlaudit;

namespace {

std::vector<GeoPoint> random_points(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
    std::vector<GeoPoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(GeoPoint::make(lat(rng), lon(rng)));
    return out;
}

Hop timed_hop(int index, const std::string& from, double rtt) {
    Hop h;
    h.index = index;
    for (int k = 0; k < 3; ++k) h.replies.push_back(Reply{IpAddress::from(from), rtt + k});
    return h;
}

}  // namespace

static void BM_Haversine(benchmark::State& state) {
    const auto pts = random_points(1024);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(haversine_km(pts[i & 1023], pts[(i + 7) & 1023]));
        ++i;
    }
}
BENCHMARK(BM_Haversine);

static void BM_Extract(benchmark::State& state) {
    const auto hops = static_cast<int>(state.range(0));
    TracerouteRecord tr{"1", Ascp::make(3320, CountryCode::from("DE")), std::nullopt, IpAddress::from("192.0.2.9"),
                        IpAddress::from("192.0.2.9"), {}, StageTag::SourceBased, {}};
    for (int h = 1; h < hops; ++h) tr.hops.push_back(timed_hop(h, "10.0.0." + std::to_string(h), 1.0 + h));
    tr.hops.push_back(timed_hop(hops, "192.0.2.9", 90.0));
    for (auto _ : state) benchmark::DoNotOptimize(extract(tr));
}
BENCHMARK(BM_Extract)->Arg(4)->Arg(16)->Arg(32);

static void BM_Anova(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> v(0.0, 25.0);
    std::vector<std::vector<double>> groups(4, std::vector<double>(static_cast<std::size_t>(state.range(0))));
    for (auto& g : groups) {
        for (auto& x : g) x = v(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(one_way_anova(groups));
}
BENCHMARK(BM_Anova)->Arg(5)->Arg(1000);

static void BM_LatencyCdf(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> v(0.02);
    std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
    for (auto& x : xs) x = v(rng);
    for (auto _ : state) benchmark::DoNotOptimize(latency_cdf(xs));
}
BENCHMARK(BM_LatencyCdf)->Arg(1000)->Arg(100000);
