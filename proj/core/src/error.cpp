#include "dlaudit/error.hpp"

#include <fmt/format.h>

namespace dlaudit {

NonPositiveRtt::NonPositiveRtt(double rtt)
    : PreconditionError(fmt::format("round-trip time must be positive, got {}", rtt)), rtt_ms(rtt) {}

UnmappedDestination::UnmappedDestination(std::string c)
    : ConfigError("no latency region configured for destination country " + c), country(std::move(c)) {}

UnresolvedDomain::UnresolvedDomain(std::string d)
    : Error("domain " + d + " has no resolved IP"), domain(std::move(d)) {}

MissingTruth::MissingTruth(std::string k) : Error("no ground truth for " + k), key(std::move(k)) {}

ZeroTotal::ZeroTotal(std::string c) : PreconditionError("zero total traceroutes for " + c), country(std::move(c)) {}

}  // namespace dlaudit
