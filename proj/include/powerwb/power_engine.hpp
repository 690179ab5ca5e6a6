#pragma once

// Post-hoc power, a-priori minimum sample size, drop-rate inflation and the
// p-value / power curve for independent t, paired t, one-way ANOVA and
// one-way repeated-measures (within factors) ANOVA designs.

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "powerwb/effect_size.hpp"

namespace powerwb {

enum class Tails { one, two };
enum class Family { independent_t, paired_t, oneway_anova, rm_within };

// Unit of a reported sample size: per group (independent t, n1 = n2),
// pairs (paired t), or total over all cells (ANOVA families).
enum class Granularity { per_group, pairs, total };

std::string_view to_string(Tails tails);
std::string_view to_string(Family family);
std::string_view to_string(Granularity granularity);
Tails tails_from_string(std::string_view name);
Family family_from_string(std::string_view name);  // accepts "paired_t" and "paired-t"

inline constexpr std::int64_t kSampleSizeCap = 10'000'000;

struct IndependentTDesign {
    EffectSize d;
    int n1 = 0;
    int n2 = 0;
};

struct PairedTDesign {
    EffectSize dz;
    int n_pairs = 0;
};

struct OneWayAnovaDesign {
    EffectSize f;
    int k = 0;
    int total_n = 0;
};

// k groups, m repeated measurements, total N, nonsphericity correction epsilon.
struct RmWithinDesign {
    EffectSize f_squared;
    int k = 0;
    int m = 0;
    int total_n = 0;
    double epsilon = 1.0;
};

struct DesignSpec {
    std::variant<IndependentTDesign, PairedTDesign, OneWayAnovaDesign, RmWithinDesign> design;
    double alpha = 0.05;
    Tails tails = Tails::two;  // ignored by the F families

    Family family() const;
    const EffectSize& effect() const;
};

struct PowerResult {
    EffectSize effect;
    double noncentrality = 0.0;
    double df1 = 0.0;               // the t df for t families
    std::optional<double> df2;      // F families only
    double critical_value = 0.0;
    double power = 0.0;
};

struct SampleSizeResult {
    std::int64_t min_n = 0;
    Granularity granularity = Granularity::total;
    double achieved_power = 0.0;
    double drop_rate = 0.0;
    std::int64_t final_n = 0;
};

struct CurvePoint {
    int n = 0;
    double t_stat = 0.0;
    double p_value = 0.0;
    double power = 0.0;
};

PowerResult power_independent_t(const EffectSize& d, int n1, int n2, double alpha, Tails tails);
PowerResult power_paired_t(const EffectSize& dz, int n_pairs, double alpha, Tails tails);
PowerResult power_oneway_anova(const EffectSize& f, int k, int total_n, double alpha);
PowerResult power_rm_within(const EffectSize& f_squared, int k, int m, int total_n, double epsilon,
                            double alpha);

// Dispatches on the design alternative.
PowerResult compute_power(const DesignSpec& spec);

// Smallest N reaching target_power. Sizes stored in the spec are ignored;
// k, m and epsilon are kept. t families step by one unit; ANOVA families step
// total N in multiples of k (equal cell sizes). Throws UnreachableTarget on a
// zero effect or when N would exceed kSampleSizeCap.
SampleSizeResult solve_min_n(const DesignSpec& spec, double target_power, double drop_rate = 0.0);

// Returns `spec` with its sample size fields set to `n` at the granularity
// solve_min_n reports.
DesignSpec with_sample_size(const DesignSpec& spec, std::int64_t n);

// ceil(min_n / (1 - drop_rate)).
std::int64_t apply_drop_rate(std::int64_t min_n, double drop_rate);

// For each N in [n_min, n_max]: observed t statistic, its p-value at df N-1
// and the paired-t power at that N.
std::vector<CurvePoint> pvalue_power_curve(const PairedDiffSummary& p, int n_min, int n_max, double alpha,
                                           Tails tails);

}  // namespace powerwb
