#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dlaudit/pipeline.hpp"
#include "dlaudit/stats.hpp"

namespace dlaudit {

// Each function renders one report file; output is deterministic.

std::string funnel_csv(const FunnelReport& f);
std::string funnel_detail_csv(const FunnelReport& f);
std::string summary_json(const AuditReport& r, std::size_t top_k);
std::string instances_csv(const FinalSample& s);
std::string candidates_csv(const CandidateSet& c, const FinalSample& s);
std::string flows_csv(const FlowMatrix& m);
std::string anova_json(const AnovaOutcome& ips, const AnovaOutcome& trackers);
std::string anova_result_json(const RegionAnova& a);
std::string cookies_csv(const std::vector<CookieSummaryRow>& rows);
std::string categories_csv(const std::map<std::string, std::size_t>& counts);
std::string cdf_csv(const std::vector<CdfPoint>& all, const std::vector<CdfPoint>& confirmed);
/// Self-contained SVG step plot of the two series.
std::string cdf_svg(const std::vector<CdfPoint>& all, const std::vector<CdfPoint>& confirmed, const std::string& title);
std::string review_queue_csv(const std::vector<ReviewItem>& items);
std::string proxy_checks_csv(const std::vector<ProxyCheckRow>& rows);

/// Writes every audit report into `dir` (created if needed) and returns the file names.
std::vector<std::string> write_audit_report(const AuditReport& r, const std::filesystem::path& dir, std::size_t top_k);

struct NamedMetrics {
    std::string name;
    ValidationMetrics metrics;
};

/// Per-experiment metrics plus a pooled entry when there is more than one.
std::string metrics_json(const std::vector<NamedMetrics>& experiments);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dlaudit
