#pragma once

// Standardized effect sizes from published summary statistics.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace powerwb {

enum class EffectKind { d, dz, f, f_squared };

std::string_view to_string(EffectKind kind);
EffectKind effect_kind_from_string(std::string_view name);

// Nonnegative standardized effect. `derivation` records how the value was
// obtained; `warnings` carries caveats (e.g. unequal group sizes).
struct EffectSize {
    EffectKind kind = EffectKind::d;
    double value = 0.0;
    std::string derivation;
    std::vector<std::string> warnings;

    // Validates value >= 0 and finite.
    static EffectSize make(EffectKind kind, double value, std::string derivation = "given");
};

struct GroupSummary {
    double mean = 0.0;
    double sd = 0.0;
    int n = 0;
};

struct PairedDiffSummary {
    double mean_diff = 0.0;
    double sd_diff = 0.0;
    int n = 0;
};

struct VarianceComponents {
    double ss_effect = 0.0;
    double ss_error = 0.0;
};

// Throw DomainError when a summary violates its invariants.
void validate(const GroupSummary& g);
void validate(const PairedDiffSummary& p);
void validate(const VarianceComponents& v);

// SD = SE * sqrt(n).
double sd_from_se(double se, int n);

// d = |m1 - m2| / sqrt((sd1^2 + sd2^2) / 2) for equal n. With unequal n the
// (n-1)-weighted pooled SD is used instead and a warning is attached.
EffectSize cohen_d(const GroupSummary& g1, const GroupSummary& g2);

// dz = |mean_diff| / sd_diff.
EffectSize cohen_dz(const PairedDiffSummary& p);

// sqrt(sum (n_i - 1) s_i^2 / (N - k)).
double pooled_sd(std::span<const GroupSummary> groups);

// f = sigma_m / sd_within, sigma_m the n-weighted SD of the group means.
EffectSize cohen_f_from_means(std::span<const GroupSummary> groups, double sd_within);

// f^2 = SS_effect / SS_error.
EffectSize f_squared_from_variances(const VarianceComponents& v);

}  // namespace powerwb
