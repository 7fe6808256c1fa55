#include "dlaudit/pipeline.hpp"

#include <algorithm>
#include <tuple>

#include <fmt/format.h>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"
#include "dlaudit/parallel.hpp"
#include "text.hpp"

namespace dlaudit {

namespace {

LatencyExtraction safe_extract(const TracerouteRecord& tr) {
    if (tr.hops.empty()) return LatencyExtraction{};
    return extract(tr);
}

}  // namespace

void ServerCandidate::record(std::string stage, std::string verdict, std::string evidence) {
    stage_trace.push_back({std::move(stage), std::move(verdict), std::move(evidence)});
}

CandidateSet::CandidateSet(std::vector<ServerCandidate> candidates) {
    std::sort(candidates.begin(), candidates.end(),
              [](const ServerCandidate& a, const ServerCandidate& b) { return a.ip < b.ip; });
    for (auto& c : candidates) {
        if (!items_.empty() && items_.back().ip == c.ip) {
            auto& into = items_.back();
            into.ascp_sources.insert(c.ascp_sources.begin(), c.ascp_sources.end());
            into.initial_sites.insert(c.initial_sites.begin(), c.initial_sites.end());
            if (!into.hostname) into.hostname = c.hostname;
            continue;
        }
        items_.push_back(std::move(c));
    }
    index_.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i].ip, i);
}

ServerCandidate* CandidateSet::find(const IpAddress& ip) {
    const auto it = index_.find(ip);
    return it == index_.end() ? nullptr : &items_[it->second];
}

const ServerCandidate* CandidateSet::find(const IpAddress& ip) const {
    const auto it = index_.find(ip);
    return it == index_.end() ? nullptr : &items_[it->second];
}

Resolver::Resolver(const ResolutionTable& global, const std::vector<TracerouteRecord>& source_traces)
    : global_(&global) {
    for (const auto& tr : source_traces) {
        if (const auto* d = std::get_if<DomainName>(&tr.target)) per_ascp_.try_emplace({tr.source, *d}, tr.dst_ip);
    }
}

std::optional<IpAddress> Resolver::resolve(const Ascp& ascp, const DomainName& d) const {
    if (const auto it = per_ascp_.find({ascp, d}); it != per_ascp_.end()) return it->second;
    if (const auto it = global_->find(d); it != global_->end()) return it->second;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

GeodbStage stage_geodb(CandidateSet& candidates, const GeoDb& geodb, const AdequacyLedger& ledger, Date date) {
    GeodbStage out;
    for (auto& c : candidates.items()) {
        ++out.input;
        const auto it = geodb.find(c.ip);
        if (it == geodb.end() || !it->second.country) {
            ++out.unknown_country;
            c.record("geodb", "unknown_country");
            continue;
        }
        const auto country = *it->second.country;
        c.inferred_country = country;
        if (is_adequate(country, ledger, date) == Adequacy::Adequate) {
            ++out.adequate;
            c.record("geodb", "adequate", country.to_string());
            continue;
        }
        ++out.kept;
        out.kept_ips.insert(c.ip);
        c.record("geodb", "non_adequate", country.to_string());
    }
    return out;
}

SourceStage stage_source(CandidateSet& candidates, const std::set<IpAddress>& geodb_survivors,
                         const std::vector<TracerouteRecord>& traces, const LatencyThresholdConfig& thresholds,
                         unsigned jobs) {
    SourceStage out;
    std::vector<std::size_t> targeted;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (traces[i].stage_tag != StageTag::SourceBased) {
            throw PreconditionError("stage_source: trace " + traces[i].measurement_id + " is not source-based");
        }
        if (geodb_survivors.contains(traces[i].dst_ip) && candidates.find(traces[i].dst_ip)) {
            targeted.push_back(i);
        } else {
            ++out.untargeted;
        }
    }

    out.outcomes.resize(targeted.size());
    parallel_for(targeted.size(), jobs, [&](std::size_t k) {
        const auto& tr = traces[targeted[k]];
        auto& o = out.outcomes[k];
        o.trace_index = targeted[k];
        o.decision = stage_policy(safe_extract(tr), StageTag::SourceBased);
        if (!o.decision.used()) return;
        const auto& country = *candidates.find(tr.dst_ip)->inferred_country;
        o.gate = o.decision.effective_ms > 0.0
                     ? source_latency_gate(o.decision.effective_ms, country, thresholds)
                     : GateVerdict::ExcludedTooClose;
    });

    std::map<IpAddress, std::pair<std::size_t, std::size_t>> per_ip;  // passing, total
    for (const auto& o : out.outcomes) {
        ++out.input;
        const auto& ip = traces[o.trace_index].dst_ip;
        auto& tally = per_ip[ip];
        ++tally.second;
        if (!o.decision.used()) {
            if (o.decision.reason == ExcludeReason::Unresponsive) {
                ++out.unresponsive;
            } else {
                ++out.first_exceeds_last;
            }
            continue;
        }
        if (o.decision.basis == LatencyBasis::DiffFirstLast) {
            ++out.diff_basis;
        } else {
            ++out.last_hop_basis;
        }
        if (o.passed()) {
            ++out.passed;
            ++tally.first;
            out.survivors.insert(ip);
        } else {
            ++out.below_gate;
        }
    }
    for (const auto& [ip, tally] : per_ip) {
        auto* c = candidates.find(ip);
        c->record("source", tally.first > 0 ? "passed" : "excluded",
                  fmt::format("{} of {} traces passed", tally.first, tally.second));
    }
    return out;
}

std::string_view to_string(DestVerdict v) {
    switch (v) {
        case DestVerdict::Unresponsive: return "unresponsive";
        case DestVerdict::InsufficientGranularity: return "insufficient_granularity";
        case DestVerdict::SolInfeasible: return "sol_infeasible";
        case DestVerdict::Passed: return "passed";
    }
    return "unresponsive";
}

DestinationStage stage_destination(CandidateSet& candidates, const std::set<IpAddress>& source_survivors,
                                   const std::vector<TracerouteRecord>& traces, const GeoDb& geodb,
                                   const SolConfig& sol, unsigned jobs) {
    DestinationStage out;
    std::map<std::pair<IpAddress, std::uint32_t>, std::size_t> chosen;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& tr = traces[i];
        if (tr.stage_tag != StageTag::DestinationBased) {
            throw PreconditionError("stage_destination: trace " + tr.measurement_id + " is not destination-based");
        }
        if (!source_survivors.contains(tr.dst_ip)) {
            ++out.untargeted;
            continue;
        }
        const auto key = std::make_pair(tr.dst_ip, tr.source.asn);
        const auto [it, inserted] = chosen.try_emplace(key, i);
        if (inserted) continue;
        ++out.duplicates;
        const auto& cur = traces[it->second];
        if (std::tie(tr.timestamp, tr.measurement_id) < std::tie(cur.timestamp, cur.measurement_id)) it->second = i;
    }

    out.measurements.reserve(chosen.size());
    for (const auto& [key, idx] : chosen) {
        out.measurements.push_back(Measurement{key.first, key.second, idx, DestVerdict::Unresponsive, {}, {}, {}, {}});
    }
    std::vector<bool> first_exceeds(out.measurements.size(), false);
    parallel_for(out.measurements.size(), jobs, [&](std::size_t k) {
        auto& m = out.measurements[k];
        const auto& tr = traces[m.trace_index];
        const auto x = safe_extract(tr);
        const auto d = stage_policy(x, StageTag::DestinationBased);
        if (!d.used()) {
            m.verdict = DestVerdict::Unresponsive;
            return;
        }
        m.effective_ms = d.effective_ms;
        m.basis = d.basis;
        first_exceeds[k] = x.verdict == ExtractionVerdict::ExcludedFirstExceedsLast;
        const auto rec = geodb.find(m.ip);
        if (rec == geodb.end() || !rec->second.point || rec->second.granularity != Granularity::City ||
            !tr.probe_point) {
            m.verdict = DestVerdict::InsufficientGranularity;
            return;
        }
        m.distance_km = haversine_km(*tr.probe_point, *rec->second.point);
        bool feasible;
        if (d.effective_ms > 0.0) {
            feasible = sol_feasible(*m.distance_km, d.effective_ms, sol) == SolVerdict::Feasible;
        } else {
            feasible = *m.distance_km == 0.0;
        }
        m.verdict = feasible ? DestVerdict::Passed : DestVerdict::SolInfeasible;
    });

    std::map<IpAddress, std::pair<std::size_t, std::size_t>> per_ip;  // passed, total
    for (std::size_t k = 0; k < out.measurements.size(); ++k) {
        const auto& m = out.measurements[k];
        ++out.input;
        auto& tally = per_ip[m.ip];
        ++tally.second;
        switch (m.verdict) {
            case DestVerdict::Unresponsive: ++out.unresponsive; continue;
            case DestVerdict::InsufficientGranularity: ++out.granularity; continue;
            case DestVerdict::SolInfeasible: ++out.sol_infeasible; break;
            case DestVerdict::Passed:
                ++out.passed;
                ++tally.first;
                break;
        }
        if (*m.basis == LatencyBasis::DiffFirstLast) {
            ++out.diff_basis;
        } else {
            ++out.last_hop_basis;
        }
        if (first_exceeds[k]) ++out.first_exceeds_last_kept;
    }
    for (const auto& ip : source_survivors) {
        auto* c = candidates.find(ip);
        if (!c) continue;
        const auto it = per_ip.find(ip);
        if (it == per_ip.end()) {
            ++out.not_measured;
            c->record("destination", "not_measured");
            continue;
        }
        c->record("destination", it->second.first > 0 ? "passed" : "excluded",
                  fmt::format("{} of {} measurements passed", it->second.first, it->second.second));
    }
    return out;
}

RdnsStage stage_rdns(CandidateSet& candidates, DestinationStage& dest, const RdnsTable& rdns, const GeohintDb& db,
                     const AdequacyLedger& ledger, Date date) {
    RdnsStage out;
    struct Cached {
        RdnsVerdict verdict;
        Geohint hint;
    };
    std::map<IpAddress, Cached> per_ip;
    for (auto& m : dest.measurements) {
        if (m.verdict != DestVerdict::Passed) continue;
        auto it = per_ip.find(m.ip);
        if (it == per_ip.end()) {
            auto* c = candidates.find(m.ip);
            if (!c || !c->inferred_country) {
                throw PreconditionError("stage_rdns: measurement for unknown candidate " + m.ip.to_string());
            }
            std::optional<DomainName> host;
            if (const auto r = rdns.find(m.ip); r != rdns.end()) host = r->second;
            if (host) c->hostname = host;
            const auto hint = extract_geohint(host, db);
            const auto verdict = rdns_stage(*c->inferred_country, hint, ledger, date);
            std::string evidence = host ? host->fqdn() : std::string();
            if (hint.kind == Geohint::Kind::Hint) {
                evidence += fmt::format(" [{}:{}]", to_string(hint.source), hint.matched);
            }
            c->record("rdns", std::string(to_string(verdict.outcome)),
                      verdict.outcome == RdnsOutcome::ReassignsTo || verdict.outcome == RdnsOutcome::IndicatesAdequate
                          ? evidence + " -> " + verdict.country.to_string()
                          : evidence);
            if (verdict.outcome == RdnsOutcome::ReassignsTo) c->inferred_country = verdict.country;
            it = per_ip.emplace(m.ip, Cached{verdict, hint}).first;
        }
        const auto& [verdict, hint] = it->second;
        m.rdns = verdict.outcome;
        ++out.input;
        switch (verdict.outcome) {
            case RdnsOutcome::ConfirmsCountry: ++out.breakdown.confirms; break;
            case RdnsOutcome::ReassignsTo: ++out.breakdown.reassigns; break;
            case RdnsOutcome::IndicatesAdequate: ++out.breakdown.indicates_adequate; break;
            case RdnsOutcome::NoHostname: ++out.breakdown.no_hostname; break;
            case RdnsOutcome::NoGeohint: ++out.breakdown.no_geohint; break;
        }
        if (hint.kind == Geohint::Kind::Hint) ++out.hint_sources[std::string(to_string(hint.source))];
        if (verdict.kept()) ++out.kept;
    }
    return out;
}

FinalSample final_sample(const DestinationStage& dest, const std::vector<CrawlLog>& crawls, const Resolver& resolver) {
    FinalSample out;
    for (const auto& m : dest.measurements) {
        if (!m.final()) continue;
        out.chains.emplace(m.ip, m.asn);
        out.ips.insert(m.ip);
    }
    std::set<Instance> instances;
    for (const auto& crawl : crawls) {
        if (crawl.fetch_status != FetchStatus::Ok) continue;
        for (const auto& d : crawl.dns_requests) {
            const auto ip = resolver.resolve(crawl.ascp, d);
            if (ip && out.ips.contains(*ip)) instances.insert(Instance{crawl.initial_domain, crawl.ascp, *ip});
        }
    }
    out.instances.assign(instances.begin(), instances.end());
    return out;
}

bool FunnelReport::conserved() const {
    return geodb.conserved() && source.conserved() && destination.conserved() && rdns.conserved() &&
           rdns_breakdown.total() == rdns.input && rdns.input == destination.passed;
}

// ---------------------------------------------------------------------------

namespace {

struct CrawlScan {
    std::map<CountryCode, std::set<IpAddress>> ips_by_country;
    std::map<CountryCode, std::set<IpAddress>> tracker_ips_by_country;
    struct TrackerLoad {
        DomainName site;
        DomainName tracker;
        IpAddress ip;
    };
    std::vector<TrackerLoad> tracker_loads;
    std::set<ReviewItem> review;
    std::size_t unresolved = 0;
};

CrawlScan scan_crawls(const std::vector<CrawlLog>& crawls, const AuditInputs& in, const Resolver& resolver) {
    CrawlScan scan;
    for (const auto& crawl : crawls) {
        if (crawl.fetch_status != FetchStatus::Ok) continue;
        const auto& site = crawl.initial_domain;
        const auto country = crawl.ascp.country;
        std::set<DomainName> seen;
        for (const auto& d : crawl.dns_requests) {
            if (!seen.insert(d).second) continue;
            const auto ip = resolver.resolve(crawl.ascp, d);
            if (ip) scan.ips_by_country[country].insert(*ip);
            if (d.tld_plus_one() == site.tld_plus_one()) continue;

            const auto tracker = label_tracker(d, in.trackers);
            if (!tracker) continue;
            ResolutionTable pair;
            if (const auto sip = resolver.resolve(crawl.ascp, site)) pair.emplace(site, *sip);
            if (ip) pair.emplace(d, *ip);
            PartyLabel party;
            try {
                party = label_party(site, d, pair, in.asmap, in.orgmap);
            } catch (const UnresolvedDomain&) {
                ++scan.unresolved;
            }
            if (party.first_party()) {
                const auto evidence = party.matched_asn ? fmt::format("AS{}", *party.matched_asn)
                                                        : "org " + party.matched_org.value_or("");
                scan.review.insert({site, d, "first_party_tracker", evidence});
                continue;
            }
            if (!ip) continue;
            scan.tracker_ips_by_country[country].insert(*ip);
            scan.tracker_loads.push_back({site, d, *ip});
        }
    }
    return scan;
}

StageCounts counts(std::string stage, std::size_t input, std::size_t unresp, std::size_t gate, std::size_t passed,
                   std::size_t unique) {
    return StageCounts{std::move(stage), input, unresp, gate, passed, unique};
}

std::vector<CdfPoint> cdf_or_empty(std::vector<double> v) {
    if (v.empty()) return {};
    return latency_cdf(std::move(v));
}

AnovaOutcome run_anova(const std::vector<CountryRateRow>& rows, const std::map<CountryCode, Region>& regions,
                       double CountryRateRow::*column) {
    AnovaOutcome out;
    try {
        out.anova = anova_by_region(rows, regions, column);
    } catch (const PreconditionError& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

AuditReport run_audit(const AuditInputs& in, const AuditConfig& cfg, const AdequacyLedger& ledger) {
    cfg.thresholds.validate();
    cfg.sol.validate();
    const Date date = ledger.audit_date();
    AuditReport report;
    auto& targets = report.targets;

    const auto excluded = [&](const Ascp& a) { return cfg.exclude_source_countries.contains(a.country); };
    for (const auto& tr : in.source_traces) {
        if (!excluded(tr.source)) report.source_traces.push_back(tr);
    }
    for (const auto& tr : in.destination_traces) report.destination_traces.push_back(tr);
    const auto& src = report.source_traces;

    // Crawls in scope: not from an excluded country and not a Google-owned target.
    std::vector<CrawlLog> crawls;
    std::set<std::pair<Ascp, DomainName>> target_set, google_set;
    for (const auto& c : in.crawls) {
        ++targets.crawls;
        if (excluded(c.ascp)) {
            ++targets.country_excluded;
            continue;
        }
        target_set.emplace(c.ascp, c.initial_domain);
        if (is_google_domain(c.initial_domain, cfg.google_extra)) {
            google_set.emplace(c.ascp, c.initial_domain);
            continue;
        }
        if (c.fetch_status == FetchStatus::Failed) ++targets.failed;
        crawls.push_back(c);
    }
    targets.targets = target_set.size();
    targets.google_excluded = google_set.size();

    const Resolver resolver(in.resolutions, src);

    // Candidates: every IP contacted by an in-scope crawl or targeted by a source trace.
    std::vector<ServerCandidate> raw;
    for (const auto& c : crawls) {
        if (c.fetch_status != FetchStatus::Ok) continue;
        for (const auto& d : c.dns_requests) {
            const auto ip = resolver.resolve(c.ascp, d);
            if (!ip) continue;
            ServerCandidate sc{*ip, {}, {c.ascp}, {c.initial_domain}, {}, {}};
            raw.push_back(std::move(sc));
        }
    }
    for (const auto& tr : src) raw.push_back(ServerCandidate{tr.dst_ip, {}, {tr.source}, {}, {}, {}});
    report.candidates = CandidateSet(std::move(raw));
    for (auto& c : report.candidates.items()) {
        if (const auto r = in.rdns.find(c.ip); r != in.rdns.end()) c.hostname = r->second;
    }

    auto& cands = report.candidates;
    report.geodb_stage = stage_geodb(cands, in.geodb, ledger, date);
    report.source_stage = stage_source(cands, report.geodb_stage.kept_ips, src, cfg.thresholds, cfg.jobs);
    report.destination_stage = stage_destination(cands, report.source_stage.survivors, report.destination_traces,
                                                 in.geodb, cfg.sol, cfg.jobs);
    report.rdns_stage = stage_rdns(cands, report.destination_stage, in.rdns, cfg.geohints, ledger, date);
    report.final = final_sample(report.destination_stage, crawls, resolver);

    const auto& gs = report.geodb_stage;
    const auto& ss = report.source_stage;
    const auto& ds = report.destination_stage;
    const auto& rs = report.rdns_stage;
    auto& f = report.funnel;
    std::set<IpAddress> dest_passed_ips;
    std::set<std::pair<IpAddress, std::uint32_t>> dest_passed_chains;
    for (const auto& m : ds.measurements) {
        if (m.verdict != DestVerdict::Passed) continue;
        dest_passed_ips.insert(m.ip);
        dest_passed_chains.emplace(m.ip, m.asn);
    }
    f.geodb = counts("geodb", gs.input, 0, gs.adequate + gs.unknown_country, gs.kept, gs.kept);
    f.source = counts("source", ss.input, ss.excluded_unresponsive(), ss.below_gate, ss.passed, ss.survivors.size());
    f.destination = counts("destination", ds.input, ds.excluded_unresponsive(), ds.sol_infeasible, ds.passed,
                           dest_passed_ips.size());
    f.rdns = counts("rdns", rs.input, 0, rs.breakdown.indicates_adequate, rs.kept, report.final.unique_ips());
    f.rdns_breakdown = rs.breakdown;
    f.final_measurements = report.final.measurements();
    f.final_unique_ips = report.final.unique_ips();
    f.instances = report.final.instances.size();

    // Chains: a source trace is final when its (ip, asn) measurement survived.
    std::map<CountryCode, std::set<IpAddress>> final_ips_by_country;
    std::map<CountryCode, std::size_t> traces_by_country, final_traces_by_country;
    for (const auto& tr : src) {
        ++traces_by_country[tr.source.country];
        report.source_dscps.insert(Dscp{tr.dst_ip, tr.source.country});
    }
    std::vector<double> source_all, source_confirmed;
    for (const auto& o : ss.outcomes) {
        const auto& tr = src[o.trace_index];
        if (o.decision.used()) source_all.push_back(o.decision.effective_ms);
        if (!o.passed()) continue;
        const auto chain = std::make_pair(tr.dst_ip, tr.source.asn);
        if (dest_passed_chains.contains(chain)) source_confirmed.push_back(o.decision.effective_ms);
        if (!report.final.chains.contains(chain)) continue;
        const auto* c = cands.find(tr.dst_ip);
        report.final_traces.push_back({o.trace_index, tr.source.country, *c->inferred_country, tr.dst_ip});
        ++final_traces_by_country[tr.source.country];
        final_ips_by_country[tr.source.country].insert(tr.dst_ip);
    }

    const auto scan = scan_crawls(crawls, in, resolver);
    targets.unresolved_domains = scan.unresolved;

    // Per-country rates.
    std::set<CountryCode> countries;
    for (const auto& [c, n] : traces_by_country) countries.insert(c);
    for (const auto& [c, s] : scan.ips_by_country) countries.insert(c);
    std::map<CountryCode, std::set<IpAddress>> ips_by_country = scan.ips_by_country;
    for (const auto& tr : src) ips_by_country[tr.source.country].insert(tr.dst_ip);
    for (const auto& country : countries) {
        const auto& fin = final_ips_by_country[country];
        CountryCounts cc{country};
        cc.traceroutes_total = traces_by_country[country];
        cc.traceroutes_non_adequate = final_traces_by_country[country];
        cc.ips_total = ips_by_country[country].size();
        cc.ips_non_adequate = fin.size();
        const auto tit = scan.tracker_ips_by_country.find(country);
        if (tit != scan.tracker_ips_by_country.end()) {
            cc.tracker_ips_total = tit->second.size();
            for (const auto& ip : tit->second) cc.tracker_ips_non_adequate += fin.contains(ip) ? 1 : 0;
        }
        report.country_counts.push_back(cc);
        if (cc.traceroutes_total == 0 || cc.ips_total == 0 || cc.tracker_ips_total == 0) {
            report.warnings.push_back("rates: " + country.to_string() + " skipped (zero total)");
            continue;
        }
        report.rates.push_back(country_rates({cc}).front());
    }
    sort_rate_rows(report.rates);

    std::vector<std::pair<CountryCode, CountryCode>> flows;
    for (const auto& t : report.final_traces) flows.emplace_back(t.source_country, t.destination_country);
    report.flows = flow_matrix(flows);

    report.anova_ips = run_anova(report.rates, cfg.regions, &CountryRateRow::pct_ips);
    report.anova_trackers = run_anova(report.rates, cfg.regions, &CountryRateRow::pct_tracker_ips);

    // Cookies set during crawls that contacted a final server.
    std::set<std::pair<DomainName, Ascp>> instance_crawls;
    for (const auto& i : report.final.instances) instance_crawls.emplace(i.initial_site, i.ascp);
    std::vector<CookieObservation> observations;
    for (const auto& c : crawls) {
        if (c.fetch_status != FetchStatus::Ok || !instance_crawls.contains({c.initial_domain, c.ascp})) continue;
        for (const auto& k : c.cookies) observations.push_back({c.initial_domain, k});
    }
    report.cookies = cookie_summary(observations, cfg.cookie_rules, cfg.entropy);

    std::set<DomainName> tracker_sites;
    std::set<ReviewItem> review = scan.review;
    for (const auto& load : scan.tracker_loads) {
        if (!report.final.ips.contains(load.ip)) continue;
        tracker_sites.insert(load.site);
        const auto* c = cands.find(load.ip);
        review.insert({load.site, load.tracker, "non_adequate_tracker",
                       load.ip.to_string() + " " + c->inferred_country->to_string()});
    }
    report.categories = category_counts({tracker_sites.begin(), tracker_sites.end()}, cfg.categories);
    report.review_queue.assign(review.begin(), review.end());

    std::vector<double> dest_all, dest_confirmed;
    for (const auto& m : ds.measurements) {
        if (!m.effective_ms) continue;
        dest_all.push_back(*m.effective_ms);
        if (m.verdict == DestVerdict::Passed) dest_confirmed.push_back(*m.effective_ms);
    }
    report.cdf_source_all = cdf_or_empty(std::move(source_all));
    report.cdf_source_confirmed = cdf_or_empty(std::move(source_confirmed));
    report.cdf_dest_all = cdf_or_empty(std::move(dest_all));
    report.cdf_dest_confirmed = cdf_or_empty(std::move(dest_confirmed));

    std::map<std::string, std::pair<Ascp, std::vector<Ascp>>> proxy;
    for (const auto& [id, claimed, observed] : in.proxy_observations) {
        auto [it, inserted] = proxy.try_emplace(id, claimed, std::vector<Ascp>{});
        if (!inserted && !(it->second.first == claimed)) {
            report.warnings.push_back("proxy: request " + id + " has conflicting claimed vantages");
        }
        it->second.second.push_back(observed);
    }
    for (const auto& [id, entry] : proxy) {
        report.proxy_checks.push_back({id, entry.first, proxy_crosscheck(entry.first, entry.second),
                                       entry.second.size()});
    }

    auto& d = f.detail;
    d["targets.crawls"] = targets.crawls;
    d["targets.distinct"] = targets.targets;
    d["targets.google_excluded"] = targets.google_excluded;
    d["targets.country_excluded_crawls"] = targets.country_excluded;
    d["targets.failed_crawls"] = targets.failed;
    d["targets.unresolved_domains"] = targets.unresolved_domains;
    d["geodb.unknown_country"] = gs.unknown_country;
    d["geodb.adequate"] = gs.adequate;
    d["source.unresponsive_last_hop"] = ss.unresponsive;
    d["source.first_exceeds_last"] = ss.first_exceeds_last;
    d["source.diff_basis"] = ss.diff_basis;
    d["source.last_hop_basis"] = ss.last_hop_basis;
    d["source.untargeted"] = ss.untargeted;
    d["source.excluded_country_traces"] = in.source_traces.size() - src.size();
    d["destination.unresponsive"] = ds.unresponsive;
    d["destination.insufficient_granularity"] = ds.granularity;
    d["destination.diff_basis"] = ds.diff_basis;
    d["destination.last_hop_basis"] = ds.last_hop_basis;
    d["destination.first_exceeds_last_kept"] = ds.first_exceeds_last_kept;
    d["destination.untargeted"] = ds.untargeted;
    d["destination.duplicates"] = ds.duplicates;
    d["destination.not_measured_ips"] = ds.not_measured;
    d["rdns.confirms"] = rs.breakdown.confirms;
    d["rdns.reassigns"] = rs.breakdown.reassigns;
    d["rdns.indicates_adequate"] = rs.breakdown.indicates_adequate;
    d["rdns.no_hostname"] = rs.breakdown.no_hostname;
    d["rdns.no_geohint"] = rs.breakdown.no_geohint;
    for (const auto& [k, v] : rs.hint_sources) d["rdns.hint." + k] = v;
    d["final.measurements"] = report.final.measurements();
    d["final.unique_ips"] = report.final.unique_ips();
    d["final.instances"] = report.final.instances.size();
    d["final.traces"] = report.final_traces.size();
    d["final.sites_with_non_adequate_trackers"] = tracker_sites.size();
    return report;
}

// ---------------------------------------------------------------------------

TruthTable parse_truth_csv(std::string_view content) {
    const auto table = csv::parse(content);
    const auto ci = table.column("ip"), cs = table.column("source_country"), ct = table.column("true_country");
    if (!ci || !cs || !ct) throw ConfigError("truth: expected columns ip,source_country,true_country");
    TruthTable truth;
    for (const auto& row : table.rows) {
        const auto at = [&](std::size_t i) {
            return i < row.fields.size() ? text::trim(row.fields[i]) : std::string_view();
        };
        const auto where = "truth line " + std::to_string(row.line);
        const auto ip = IpAddress::parse(at(*ci));
        const auto source = normalize_country(at(*cs));
        const auto real = normalize_country(at(*ct));
        if (!ip || !source || !real) throw ConfigError(where + ": invalid row");
        if (!truth.emplace(Dscp{*ip, *source}, *real).second) throw ConfigError(where + ": duplicate DSCP");
    }
    return truth;
}

ValidationMetrics& ValidationMetrics::operator+=(const ValidationMetrics& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    finalize();
    return *this;
}

void ValidationMetrics::finalize() {
    const auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
        if (b == 0) return std::nullopt;
        return static_cast<double>(a) / static_cast<double>(b);
    };
    tpr = ratio(tp, tp + fn);
    fnr = ratio(fn, tp + fn);
    precision = ratio(tp, tp + fp);
}

ValidationMetrics run_validation(const TruthTable& truth, const AuditReport& report, const AdequacyLedger& ledger) {
    if (truth.empty()) throw EmptyInput("validation: empty truth table");
    std::set<Dscp> positive;
    for (const auto& t : report.final_traces) positive.insert(Dscp{t.ip, t.source_country});
    std::set<Dscp> evaluated(report.source_dscps);
    for (const auto& d : evaluated) {
        if (!truth.contains(d)) throw MissingTruth(d.ip.to_string() + "/" + d.source_country.to_string());
    }
    for (const auto& [d, c] : truth) evaluated.insert(d);

    ValidationMetrics m;
    for (const auto& d : evaluated) {
        const bool predicted = positive.contains(d);
        const bool actual = is_adequate(truth.at(d), ledger, ledger.audit_date()) == Adequacy::NonAdequate;
        if (predicted && actual) ++m.tp;
        if (predicted && !actual) ++m.fp;
        if (!predicted && actual) ++m.fn;
        if (!predicted && !actual) ++m.tn;
    }
    m.finalize();
    return m;
}

}  // namespace dlaudit
