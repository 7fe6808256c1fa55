#pragma once

#include <optional>
#include <string_view>

#include "dlaudit/ingest.hpp"

namespace dlaudit {

enum class LatencyBasis { DiffFirstLast, LastHopOnly };
enum class ExtractionVerdict { Usable, ExcludedUnresponsive, ExcludedFirstExceedsLast };

std::string_view to_string(LatencyBasis b);
std::string_view to_string(ExtractionVerdict v);

/// Raw latency evidence of one traceroute, before any stage policy.
struct LatencyExtraction {
    std::optional<double> first_hop_rtt_ms;
    std::optional<double> last_hop_rtt_ms;
    std::optional<double> effective_ms;  // present iff verdict == Usable
    LatencyBasis basis = LatencyBasis::LastHopOnly;
    ExtractionVerdict verdict = ExtractionVerdict::ExcludedUnresponsive;
    std::optional<IpAddress> last_hop_ip;

    friend bool operator==(const LatencyExtraction&, const LatencyExtraction&) = default;
};

/// Per-hop RTT is the minimum over replies that carry a source address. The
/// last responding hop must be answered by dst_ip with a timed reply, else
/// the trace is unresponsive. The first hop is hop 1 when timed.
/// Throws PreconditionError when the trace has no hops.
LatencyExtraction extract(const TracerouteRecord& tr);

enum class PolicyAction { Use, Exclude };
enum class ExcludeReason { Unresponsive, FirstExceedsLast };

std::string_view to_string(ExcludeReason r);

struct PolicyDecision {
    PolicyAction action = PolicyAction::Exclude;
    double effective_ms = 0.0;  // meaningful when action == Use
    LatencyBasis basis = LatencyBasis::LastHopOnly;
    ExcludeReason reason = ExcludeReason::Unresponsive;  // meaningful when action == Exclude

    [[nodiscard]] bool used() const { return action == PolicyAction::Use; }
};

/// Source stage excludes unresponsive and first>last traces. Destination
/// stage excludes only unresponsive traces and falls back to the last hop.
PolicyDecision stage_policy(const LatencyExtraction& x, StageTag stage);

}  // namespace dlaudit
