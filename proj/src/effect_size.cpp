#include "powerwb/effect_size.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "format.hpp"
#include "powerwb/errors.hpp"

namespace powerwb {

using detail::compact;

std::string_view to_string(EffectKind kind) {
    switch (kind) {
        case EffectKind::d: return "d";
        case EffectKind::dz: return "dz";
        case EffectKind::f: return "f";
        case EffectKind::f_squared: return "f_squared";
    }
    return "d";
}

EffectKind effect_kind_from_string(std::string_view name) {
    if (name == "d") return EffectKind::d;
    if (name == "dz") return EffectKind::dz;
    if (name == "f") return EffectKind::f;
    if (name == "f_squared") return EffectKind::f_squared;
    throw DomainError("unknown effect size kind '" + std::string(name) + "'");
}

EffectSize EffectSize::make(EffectKind kind, double value, std::string derivation) {
    if (!(value >= 0.0) || !std::isfinite(value))
        throw DomainError("effect size must be a nonnegative finite number");
    EffectSize e;
    e.kind = kind;
    e.value = value;
    e.derivation = std::move(derivation);
    return e;
}

void validate(const GroupSummary& g) {
    if (!std::isfinite(g.mean)) throw DomainError("group mean must be finite");
    if (!(g.sd > 0.0) || !std::isfinite(g.sd)) throw DomainError("group sd must be positive");
    if (g.n < 2) throw DomainError("group n must be at least 2");
}

void validate(const PairedDiffSummary& p) {
    if (!std::isfinite(p.mean_diff)) throw DomainError("mean difference must be finite");
    if (!(p.sd_diff > 0.0) || !std::isfinite(p.sd_diff))
        throw DomainError("sd of differences must be positive");
    if (p.n < 2) throw DomainError("number of pairs must be at least 2");
}

void validate(const VarianceComponents& v) {
    if (!(v.ss_effect >= 0.0) || !std::isfinite(v.ss_effect))
        throw DomainError("effect sum of squares must be nonnegative");
    if (!(v.ss_error > 0.0) || !std::isfinite(v.ss_error))
        throw DomainError("error sum of squares must be positive");
}

double sd_from_se(double se, int n) {
    if (!(se > 0.0) || !std::isfinite(se)) throw DomainError("standard error must be positive");
    if (n < 1) throw DomainError("n must be at least 1");
    return se * std::sqrt(static_cast<double>(n));
}

EffectSize cohen_d(const GroupSummary& g1, const GroupSummary& g2) {
    validate(g1);
    validate(g2);
    const double diff = std::fabs(g1.mean - g2.mean);
    if (g1.n == g2.n) {
        const double sd = std::sqrt((g1.sd * g1.sd + g2.sd * g2.sd) / 2.0);
        return EffectSize::make(EffectKind::d, diff / sd,
                                "d = |" + compact(g1.mean) + " - " + compact(g2.mean) + "| / sqrt((" +
                                    compact(g1.sd) + "^2 + " + compact(g2.sd) + "^2) / 2)");
    }
    const GroupSummary both[] = {g1, g2};
    const double sd = pooled_sd(both);
    auto e = EffectSize::make(EffectKind::d, diff / sd,
                              "d = |" + compact(g1.mean) + " - " + compact(g2.mean) + "| / pooled sd " +
                                  compact(sd));
    e.warnings.push_back("unequal group sizes (" + std::to_string(g1.n) + " vs " + std::to_string(g2.n) +
                         "): d uses the (n-1)-weighted pooled sd");
    return e;
}

EffectSize cohen_dz(const PairedDiffSummary& p) {
    validate(p);
    return EffectSize::make(EffectKind::dz, std::fabs(p.mean_diff) / p.sd_diff,
                            "dz = |" + compact(p.mean_diff) + "| / " + compact(p.sd_diff));
}

double pooled_sd(std::span<const GroupSummary> groups) {
    if (groups.size() < 2) throw DomainError("pooled sd needs at least 2 groups");
    double weighted = 0.0;
    long total = 0;
    for (const auto& g : groups) {
        validate(g);
        weighted += (g.n - 1) * g.sd * g.sd;
        total += g.n;
    }
    return std::sqrt(weighted / static_cast<double>(total - static_cast<long>(groups.size())));
}

EffectSize cohen_f_from_means(std::span<const GroupSummary> groups, double sd_within) {
    if (groups.size() < 2) throw DomainError("effect size f needs at least 2 groups");
    if (!(sd_within > 0.0) || !std::isfinite(sd_within))
        throw DomainError("within-group sd must be positive");
    double total = 0.0;
    double weighted_sum = 0.0;
    for (const auto& g : groups) {
        validate(g);
        total += g.n;
        weighted_sum += g.n * g.mean;
    }
    const double grand = weighted_sum / total;
    double ss = 0.0;
    for (const auto& g : groups) ss += g.n * (g.mean - grand) * (g.mean - grand);
    const double sigma_m = std::sqrt(ss / total);
    return EffectSize::make(EffectKind::f, sigma_m / sd_within,
                            "f = sigma_m " + compact(sigma_m) + " / sd_within " + compact(sd_within) + " over " +
                                std::to_string(groups.size()) + " groups");
}

EffectSize f_squared_from_variances(const VarianceComponents& v) {
    validate(v);
    return EffectSize::make(EffectKind::f_squared, v.ss_effect / v.ss_error,
                            "f^2 = SS_effect " + compact(v.ss_effect) + " / SS_error " + compact(v.ss_error));
}

}  // namespace powerwb
