#pragma once

// Regenerates the Power / Min N / Final N columns of published summary
// tables from CSV transcriptions.
//
// CSV schemas (header row required, '#' lines are comments):
//   independent_t  label,mean1,sd1,n1,mean2,sd2,n2        (se1/se2 accepted in place of sd1/sd2)
//   paired_t       label,mean_diff,sd_diff,n
//   oneway_anova   label,mean1,sd1,n1,mean2,sd2,n2,...     (>= 2 triplets, optional sd_within)
//   rm_within      label,ss_effect,ss_error,k,m,n_total,epsilon
// Every schema also accepts an optional reported_p column, passed through
// verbatim. In rm_within, empty ss_effect / ss_error cells mark a row whose
// variance components were not published.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "powerwb/effect_size.hpp"
#include "powerwb/power_engine.hpp"

namespace powerwb {

struct IndependentTRow {
    GroupSummary group1;
    GroupSummary group2;
};

struct OneWayAnovaRow {
    std::vector<GroupSummary> groups;
    std::optional<double> sd_within;  // overrides the pooled estimate when present
};

struct RmWithinRow {
    std::optional<VarianceComponents> components;
    int k = 0;
    int m = 0;
    int n_total = 0;
    double epsilon = 1.0;
};

struct StudyRow {
    std::size_t line = 0;
    std::string label;
    std::variant<IndependentTRow, PairedDiffSummary, OneWayAnovaRow, RmWithinRow> payload;
    std::optional<std::string> reported_p;

    Family family() const { return static_cast<Family>(payload.index()); }
};

struct AuditConfig {
    double alpha = 0.05;
    Tails tails = Tails::two;
    double target_power = 0.8;
    double drop_rate = 0.10;
};

enum class RowStatus { ok, unreachable, not_reproducible, error };
std::string_view to_string(RowStatus status);

struct AuditRow {
    std::string label;
    Family family = Family::independent_t;
    RowStatus status = RowStatus::ok;
    std::optional<EffectSize> effect;
    std::optional<PowerResult> power;     // post-hoc at the published N
    std::optional<SampleSizeResult> sample_size;
    Granularity granularity = Granularity::total;
    std::optional<std::string> reported_p;
    std::string note;
};

struct AuditReport {
    AuditConfig config;
    std::vector<AuditRow> rows;
};

// Parses a CSV transcription. Throws ParseError naming line and column on an
// unknown header, a non-numeric cell or a cell violating the summary invariants.
std::vector<StudyRow> parse_study_csv(std::string_view content, Family family);

// Effect size, post-hoc power at the published N, minimum N at the target
// power and drop-rate inflation for a single row.
AuditRow audit_row(const StudyRow& row, const AuditConfig& config);

// Row-wise audit preserving input order. Throws DomainError on empty input or
// an invalid config; individual row failures become row markers.
AuditReport audit(std::span<const StudyRow> rows, const AuditConfig& config);

// Aligned text table and CSV, power at 4 decimals and N as integers.
std::string render_text(const AuditReport& report);
std::string render_csv(const AuditReport& report);

}  // namespace powerwb
