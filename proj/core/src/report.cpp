#include "dlaudit/report.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dlaudit/csv.hpp"
#include "dlaudit/error.hpp"

namespace dlaudit {

namespace {

using ojson = nlohmann::ordered_json;

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson anova_to_json(const AnovaOutcome& o) {
    if (!o.anova) return ojson{{"error", o.error}};
    const auto& a = *o.anova;
    ojson j;
    j["f_stat"] = std::isfinite(a.result.f_stat) ? ojson(a.result.f_stat) : ojson("inf");
    j["p_value"] = a.result.p_value;
    j["df_between"] = a.result.df_between;
    j["df_within"] = a.result.df_within;
    j["group_means"] = ojson::object();
    for (const auto& [region, mean] : a.group_means) j["group_means"][std::string(to_string(region))] = mean;
    j["members"] = ojson::object();
    for (const auto& [region, members] : a.members) {
        auto arr = ojson::array();
        for (const auto& c : members) arr.push_back(c.to_string());
        j["members"][std::string(to_string(region))] = arr;
    }
    return j;
}

ojson stage_json(const StageCounts& s) {
    return ojson{{"input", s.input},
                 {"excluded_unresponsive", s.excluded_unresponsive},
                 {"excluded_adequate_or_gate", s.excluded_adequate_or_gate},
                 {"passed", s.passed},
                 {"unique_ips", s.unique_ips}};
}

ojson metrics_to_json(const ValidationMetrics& m) {
    return ojson{{"tp", m.tp},   {"fp", m.fp},   {"tn", m.tn},
                 {"fn", m.fn},   {"tpr", optional_number(m.tpr)}, {"fnr", optional_number(m.fnr)},
                 {"precision", optional_number(m.precision)}};
}

std::string num(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

std::string funnel_csv(const FunnelReport& f) {
    std::string out =
        "stage,input,excluded_unresponsive,excluded_adequate_or_gate,passed,unique_ips,confirms,reassigns,"
        "indicates_adequate,no_hostname,no_geohint\n";
    for (const auto* s : {&f.geodb, &f.source, &f.destination}) {
        out += fmt::format("{},{},{},{},{},{},,,,,\n", s->stage, s->input, s->excluded_unresponsive,
                           s->excluded_adequate_or_gate, s->passed, s->unique_ips);
    }
    const auto& b = f.rdns_breakdown;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", f.rdns.stage, f.rdns.input, f.rdns.excluded_unresponsive,
                       f.rdns.excluded_adequate_or_gate, f.rdns.passed, f.rdns.unique_ips, b.confirms, b.reassigns,
                       b.indicates_adequate, b.no_hostname, b.no_geohint);
    out += fmt::format("final,{},0,0,{},{},,,,,\n", f.final_measurements, f.final_measurements, f.final_unique_ips);
    return out;
}

std::string funnel_detail_csv(const FunnelReport& f) {
    std::string out = "key,value\n";
    for (const auto& [k, v] : f.detail) out += fmt::format("{},{}\n", k, v);
    return out;
}

std::string summary_json(const AuditReport& r, std::size_t top_k) {
    ojson j;
    const auto& f = r.funnel;
    j["funnel"] = ojson{{"geodb", stage_json(f.geodb)},
                        {"source", stage_json(f.source)},
                        {"destination", stage_json(f.destination)},
                        {"rdns", stage_json(f.rdns)}};
    j["rdns_breakdown"] = ojson{{"confirms", f.rdns_breakdown.confirms},
                                {"reassigns", f.rdns_breakdown.reassigns},
                                {"indicates_adequate", f.rdns_breakdown.indicates_adequate},
                                {"no_hostname", f.rdns_breakdown.no_hostname},
                                {"no_geohint", f.rdns_breakdown.no_geohint}};
    j["final"] = ojson{{"measurements", f.final_measurements},
                       {"unique_ips", f.final_unique_ips},
                       {"instances", f.instances},
                       {"traces", r.final_traces.size()}};
    j["conserved"] = f.conserved();
    auto top = ojson::array();
    for (const auto& c : r.flows.top_destinations(top_k)) top.push_back(c.to_string());
    j["flows"] = ojson{{"total", r.flows.total()},
                       {"top_k", top_k},
                       {"top_destinations", top},
                       {"coverage_pct", r.flows.coverage_pct(top_k)}};
    if (const auto means = column_means(r.rates)) {
        j["rate_means"] = ojson{{"pct_traceroutes", means->pct_traceroutes},
                                {"pct_ips", means->pct_ips},
                                {"pct_tracker_ips", means->pct_tracker_ips}};
    } else {
        j["rate_means"] = nullptr;
    }
    j["detail"] = ojson::object();
    for (const auto& [k, v] : f.detail) j["detail"][k] = v;
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

std::string instances_csv(const FinalSample& s) {
    std::string out = "initial_site,asn,country,server_ip\n";
    for (const auto& i : s.instances) {
        out += fmt::format("{},{},{},{}\n", i.initial_site.fqdn(), i.ascp.asn, i.ascp.country.str(),
                           i.server_ip.to_string());
    }
    return out;
}

std::string candidates_csv(const CandidateSet& c, const FinalSample& s) {
    std::string out = "ip,hostname,inferred_country,final,ascps,sites,stage_trace\n";
    for (const auto& cand : c.items()) {
        std::string trace;
        for (const auto& e : cand.stage_trace) {
            if (!trace.empty()) trace += "; ";
            trace += e.stage + ":" + e.verdict;
            if (!e.evidence.empty()) trace += "(" + e.evidence + ")";
        }
        out += csv::join({cand.ip.to_string(), cand.hostname ? cand.hostname->fqdn() : "",
                          cand.inferred_country ? cand.inferred_country->to_string() : "",
                          s.ips.contains(cand.ip) ? "1" : "0", std::to_string(cand.ascp_sources.size()),
                          std::to_string(cand.initial_sites.size()), trace}) +
               "\n";
    }
    return out;
}

std::string flows_csv(const FlowMatrix& m) {
    std::string out = "source_country,destination_country,count\n";
    for (const auto& [k, v] : m.counts) out += fmt::format("{},{},{}\n", k.first.str(), k.second.str(), v);
    return out;
}

std::string anova_json(const AnovaOutcome& ips, const AnovaOutcome& trackers) {
    ojson j;
    j["ips"] = anova_to_json(ips);
    j["trackers"] = anova_to_json(trackers);
    return j.dump(2) + "\n";
}

std::string anova_result_json(const RegionAnova& a) { return anova_to_json(AnovaOutcome{a, {}}).dump(2) + "\n"; }

std::string cookies_csv(const std::vector<CookieSummaryRow>& rows) {
    std::string out = "identifier,org,purpose,cookie_count,website_count\n";
    for (const auto& r : rows) {
        out += csv::join({r.pattern, r.org, r.purpose, std::to_string(r.cookie_count), std::to_string(r.website_count)}) +
               "\n";
    }
    return out;
}

std::string categories_csv(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> rows(counts.begin(), counts.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out = "category,sites\n";
    for (const auto& [k, v] : rows) out += csv::join({k, std::to_string(v)}) + "\n";
    return out;
}

std::string cdf_csv(const std::vector<CdfPoint>& all, const std::vector<CdfPoint>& confirmed) {
    std::string out = "series,x_ms,F\n";
    for (const auto& p : all) out += fmt::format("all,{},{}\n", num(p.x), num(p.f));
    for (const auto& p : confirmed) out += fmt::format("confirmed,{},{}\n", num(p.x), num(p.f));
    return out;
}

std::string cdf_svg(const std::vector<CdfPoint>& all, const std::vector<CdfPoint>& confirmed, const std::string& title) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
    double xmax = 1.0;
    for (const auto* s : {&all, &confirmed}) {
        if (!s->empty()) xmax = std::max(xmax, s->back().x);
    }
    const auto sx = [&](double x) { return L + (W - L - R) * std::max(0.0, x) / xmax; };
    const auto sy = [&](double f) { return H - B - (H - T - B) * f; };
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{3}</text>\n",
        W, H, W / 2, xml_escape(title));
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L, H - B, W - R);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, H - B, T);
    for (int i = 0; i <= 4; ++i) {
        const double f = i / 4.0, x = xmax * i / 4.0;
        out += fmt::format(
            "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.2f}</text>\n",
            L - 6, sy(f) + 4, f);
        out += fmt::format(
            "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{:.0f}</text>\n",
            sx(x), H - B + 16, x);
    }
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">latency (ms)</text>\n",
        (L + W - R) / 2, H - 12);
    const auto path = [&](const std::vector<CdfPoint>& s, const char* color, const char* label, int row) {
        if (s.empty()) return;
        std::string d = fmt::format("M{:.2f},{:.2f}", sx(0), sy(0));
        double prev = 0.0;
        for (const auto& p : s) {
            d += fmt::format(" H{:.2f} V{:.2f}", sx(p.x), sy(p.f));
            prev = p.f;
        }
        d += fmt::format(" H{:.2f}", sx(xmax));
        (void)prev;
        out += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", d, color);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                           W - R - 150, T + 16.0 * row + 10, color, label);
    };
    path(all, "#1f77b4", "all candidates", 0);
    path(confirmed, "#d62728", "confirmed non-adequate", 1);
    out += "</svg>\n";
    return out;
}

std::string review_queue_csv(const std::vector<ReviewItem>& items) {
    std::string out = "initial_site,tracker,reason,evidence\n";
    for (const auto& i : items) out += csv::join({i.initial_site.fqdn(), i.tracker.fqdn(), i.reason, i.evidence}) + "\n";
    return out;
}

std::string proxy_checks_csv(const std::vector<ProxyCheckRow>& rows) {
    std::string out = "request_id,claimed_asn,claimed_country,observed,verdict\n";
    for (const auto& r : rows) {
        out += csv::join({r.request_id, std::to_string(r.claimed.asn), r.claimed.country.to_string(),
                          std::to_string(r.observed), std::string(to_string(r.verdict))}) +
               "\n";
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("cannot write " + path.string());
}

std::vector<std::string> write_audit_report(const AuditReport& r, const std::filesystem::path& dir, std::size_t top_k) {
    const std::vector<std::pair<std::string, std::string>> files = {
        {"funnel.csv", funnel_csv(r.funnel)},
        {"funnel_detail.csv", funnel_detail_csv(r.funnel)},
        {"summary.json", summary_json(r, top_k)},
        {"instances.csv", instances_csv(r.final)},
        {"candidates.csv", candidates_csv(r.candidates, r.final)},
        {"rates.csv", rates_to_csv(r.rates)},
        {"flows.csv", flows_csv(r.flows)},
        {"anova.json", anova_json(r.anova_ips, r.anova_trackers)},
        {"cookies.csv", cookies_csv(r.cookies)},
        {"categories.csv", categories_csv(r.categories)},
        {"cdf_source.csv", cdf_csv(r.cdf_source_all, r.cdf_source_confirmed)},
        {"cdf_dest.csv", cdf_csv(r.cdf_dest_all, r.cdf_dest_confirmed)},
        {"cdf_source.svg", cdf_svg(r.cdf_source_all, r.cdf_source_confirmed, "Source-based latency")},
        {"cdf_dest.svg", cdf_svg(r.cdf_dest_all, r.cdf_dest_confirmed, "Destination-based latency")},
        {"review_queue.csv", review_queue_csv(r.review_queue)},
        {"proxy_checks.csv", proxy_checks_csv(r.proxy_checks)},
    };
    std::vector<std::string> names;
    for (const auto& [name, content] : files) {
        write_file(dir / name, content);
        names.push_back(name);
    }
    return names;
}

std::string metrics_json(const std::vector<NamedMetrics>& experiments) {
    ojson j;
    j["experiments"] = ojson::object();
    ValidationMetrics pooled;
    for (const auto& e : experiments) {
        j["experiments"][e.name] = metrics_to_json(e.metrics);
        pooled += e.metrics;
    }
    pooled.finalize();
    if (experiments.size() > 1) j["pooled"] = metrics_to_json(pooled);
    return j.dump(2) + "\n";
}

}  // namespace dlaudit
