#include "dlaudit/latency.hpp"

#include <algorithm>

#include "dlaudit/error.hpp"

namespace dlaudit {

namespace {

struct HopRtt {
    std::optional<double> rtt;
    bool from_dst = false;
};

HopRtt hop_rtt(const Hop& hop, const IpAddress& dst) {
    HopRtt out;
    for (const auto& r : hop.replies) {
        if (!r.from_ip) continue;
        if (*r.from_ip == dst) out.from_dst = true;
        if (r.rtt_ms && (!out.rtt || *r.rtt_ms < *out.rtt)) out.rtt = r.rtt_ms;
    }
    return out;
}

}  // namespace

std::string_view to_string(LatencyBasis b) { return b == LatencyBasis::DiffFirstLast ? "diff" : "last_hop"; }

std::string_view to_string(ExtractionVerdict v) {
    switch (v) {
        case ExtractionVerdict::Usable: return "usable";
        case ExtractionVerdict::ExcludedUnresponsive: return "unresponsive";
        case ExtractionVerdict::ExcludedFirstExceedsLast: return "first_exceeds_last";
    }
    return "unresponsive";
}

std::string_view to_string(ExcludeReason r) {
    return r == ExcludeReason::Unresponsive ? "unresponsive" : "first_exceeds_last";
}

LatencyExtraction extract(const TracerouteRecord& tr) {
    if (tr.hops.empty()) throw PreconditionError("traceroute " + tr.measurement_id + " has no hops");
    LatencyExtraction x;

    const auto& first = tr.hops.front();
    if (first.index == 1) x.first_hop_rtt_ms = hop_rtt(first, tr.dst_ip).rtt;

    // The last responding hop must be the destination itself.
    for (auto it = tr.hops.rbegin(); it != tr.hops.rend(); ++it) {
        const bool any_from = std::any_of(it->replies.begin(), it->replies.end(),
                                          [](const Reply& r) { return r.from_ip.has_value(); });
        if (!any_from) continue;
        const auto h = hop_rtt(*it, tr.dst_ip);
        if (h.from_dst && h.rtt) {
            x.last_hop_rtt_ms = h.rtt;
            x.last_hop_ip = tr.dst_ip;
        }
        break;
    }

    if (!x.last_hop_rtt_ms) {
        x.verdict = ExtractionVerdict::ExcludedUnresponsive;
        return x;
    }
    if (!x.first_hop_rtt_ms) {
        x.verdict = ExtractionVerdict::Usable;
        x.basis = LatencyBasis::LastHopOnly;
        x.effective_ms = x.last_hop_rtt_ms;
        return x;
    }
    if (*x.first_hop_rtt_ms > *x.last_hop_rtt_ms) {
        x.verdict = ExtractionVerdict::ExcludedFirstExceedsLast;
        return x;
    }
    x.verdict = ExtractionVerdict::Usable;
    x.basis = LatencyBasis::DiffFirstLast;
    x.effective_ms = *x.last_hop_rtt_ms - *x.first_hop_rtt_ms;
    return x;
}

PolicyDecision stage_policy(const LatencyExtraction& x, StageTag stage) {
    PolicyDecision d;
    switch (x.verdict) {
        case ExtractionVerdict::ExcludedUnresponsive:
            d.reason = ExcludeReason::Unresponsive;
            return d;
        case ExtractionVerdict::ExcludedFirstExceedsLast:
            if (stage == StageTag::SourceBased) {
                d.reason = ExcludeReason::FirstExceedsLast;
                return d;
            }
            d.action = PolicyAction::Use;
            d.effective_ms = *x.last_hop_rtt_ms;
            d.basis = LatencyBasis::LastHopOnly;
            return d;
        case ExtractionVerdict::Usable:
            break;
    }
    d.action = PolicyAction::Use;
    if (stage == StageTag::DestinationBased && x.basis == LatencyBasis::LastHopOnly) {
        d.effective_ms = *x.last_hop_rtt_ms;
    } else {
        d.effective_ms = *x.effective_ms;
    }
    d.basis = x.basis;
    return d;
}

}  // namespace dlaudit
