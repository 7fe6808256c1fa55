#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dlaudit/country.hpp"
#include "dlaudit/date.hpp"

namespace dlaudit {

enum class AdequacyStatus { EUMember, EEA, AdequateThirdCountry };
enum class Adequacy { Adequate, NonAdequate };

std::string_view to_string(AdequacyStatus s);
std::optional<AdequacyStatus> parse_adequacy_status(std::string_view s);
std::string_view to_string(Adequacy a);

/// One decision. The effective range is half-open: [effective_from, effective_until).
struct AdequacyDecision {
    CountryCode country;
    AdequacyStatus status;
    Date effective_from;
    std::optional<Date> effective_until;
    std::string scope_note;

    [[nodiscard]] bool active_on(Date d) const;
};

/// Date-effective adequacy decisions plus the audit date of the run.
///
/// EU member states are adequate on every date whether or not the ledger
/// lists them. Countries without an active decision are non-adequate.
class AdequacyLedger {
public:
    /// Validates that every range is non-empty and that no country has two
    /// decisions active on the same date. Throws ConfigError otherwise.
    AdequacyLedger(std::vector<AdequacyDecision> decisions, Date audit_date);

    /// CSV with header `country,status,effective_from,effective_until,scope_note`.
    static AdequacyLedger parse_csv(std::string_view content, Date audit_date);
    static AdequacyLedger load_csv(const std::string& path, Date audit_date);

    [[nodiscard]] const std::vector<AdequacyDecision>& decisions() const { return decisions_; }
    [[nodiscard]] Date audit_date() const { return audit_date_; }
    [[nodiscard]] std::string to_csv() const;

private:
    std::vector<AdequacyDecision> decisions_;
    Date audit_date_;
};

/// Total: Adequate iff EU member, or some decision for `country` is active on `date`.
Adequacy is_adequate(const CountryCode& country, const AdequacyLedger& ledger, Date date);

}  // namespace dlaudit
