#include "powerwb/power_engine.hpp"

#include <cmath>
#include <string>

#include "powerwb/distributions.hpp"
#include "powerwb/errors.hpp"

namespace powerwb {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

void check_kind(const EffectSize& e, EffectKind expected) {
    if (e.kind != expected)
        throw DomainError("expected effect size of kind '" + std::string(to_string(expected)) + "', got '" +
                          std::string(to_string(e.kind)) + "'");
    if (!(e.value >= 0.0) || !std::isfinite(e.value))
        throw DomainError("effect size must be a nonnegative finite number");
}

// Power of a t test with noncentrality delta >= 0.
PowerResult t_power(const EffectSize& effect, double df, double delta, double alpha, Tails tails) {
    PowerResult r;
    r.effect = effect;
    r.noncentrality = delta;
    r.df1 = df;
    const Dof dof(df);
    const Noncentrality nc(delta);
    if (tails == Tails::two) {
        const double crit = t_quantile(1.0 - alpha / 2.0, dof);
        r.critical_value = crit;
        r.power = (1.0 - nct_cdf(crit, dof, nc)) + nct_cdf(-crit, dof, nc);
    } else {
        const double crit = t_quantile(1.0 - alpha, dof);
        r.critical_value = crit;
        r.power = 1.0 - nct_cdf(crit, dof, nc);
    }
    r.power = std::fmin(1.0, std::fmax(0.0, r.power));
    return r;
}

PowerResult f_power(const EffectSize& effect, double df1, double df2, double lambda, double alpha) {
    PowerResult r;
    r.effect = effect;
    r.noncentrality = lambda;
    r.df1 = df1;
    r.df2 = df2;
    const Dof d1(df1);
    const Dof d2(df2);
    r.critical_value = f_quantile(1.0 - alpha, d1, d2);
    r.power = std::fmin(1.0, std::fmax(0.0, 1.0 - ncf_cdf(r.critical_value, d1, d2, Noncentrality(lambda))));
    return r;
}

struct SearchPlan {
    std::int64_t step;       // N = unit * step
    std::int64_t min_unit;
    Granularity granularity;
};

SearchPlan plan_for(const DesignSpec& spec) {
    return std::visit(
        [](const auto& d) -> SearchPlan {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, IndependentTDesign>) {
                return {1, 2, Granularity::per_group};
            } else if constexpr (std::is_same_v<T, PairedTDesign>) {
                return {1, 2, Granularity::pairs};
            } else if constexpr (std::is_same_v<T, OneWayAnovaDesign>) {
                if (d.k < 2) throw DomainError("one-way ANOVA needs at least 2 groups");
                return {d.k, 2, Granularity::total};
            } else {
                if (d.k < 1) throw DomainError("repeated-measures ANOVA needs at least 1 group");
                return {d.k, 2, Granularity::total};
            }
        },
        spec.design);
}

}  // namespace

std::string_view to_string(Tails tails) { return tails == Tails::one ? "one" : "two"; }

std::string_view to_string(Family family) {
    switch (family) {
        case Family::independent_t: return "independent_t";
        case Family::paired_t: return "paired_t";
        case Family::oneway_anova: return "oneway_anova";
        case Family::rm_within: return "rm_within";
    }
    return "independent_t";
}

std::string_view to_string(Granularity granularity) {
    switch (granularity) {
        case Granularity::per_group: return "per_group";
        case Granularity::pairs: return "pairs";
        case Granularity::total: return "total";
    }
    return "total";
}

Tails tails_from_string(std::string_view name) {
    if (name == "one") return Tails::one;
    if (name == "two") return Tails::two;
    throw DomainError("tails must be 'one' or 'two', got '" + std::string(name) + "'");
}

Family family_from_string(std::string_view name) {
    std::string s(name);
    for (auto& c : s)
        if (c == '-') c = '_';
    if (s == "independent_t") return Family::independent_t;
    if (s == "paired_t") return Family::paired_t;
    if (s == "oneway_anova") return Family::oneway_anova;
    if (s == "rm_within") return Family::rm_within;
    throw DomainError("unknown test family '" + std::string(name) + "'");
}

Family DesignSpec::family() const {
    return static_cast<Family>(design.index());
}

const EffectSize& DesignSpec::effect() const {
    return std::visit(
        [](const auto& d) -> const EffectSize& {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, IndependentTDesign>)
                return d.d;
            else if constexpr (std::is_same_v<T, PairedTDesign>)
                return d.dz;
            else if constexpr (std::is_same_v<T, OneWayAnovaDesign>)
                return d.f;
            else
                return d.f_squared;
        },
        design);
}

PowerResult power_independent_t(const EffectSize& d, int n1, int n2, double alpha, Tails tails) {
    check_kind(d, EffectKind::d);
    check_alpha(alpha);
    if (n1 < 2 || n2 < 2) throw DomainError("independent t test needs n1, n2 >= 2");
    const double a = n1;
    const double b = n2;
    return t_power(d, a + b - 2.0, d.value * std::sqrt(a * b / (a + b)), alpha, tails);
}

PowerResult power_paired_t(const EffectSize& dz, int n_pairs, double alpha, Tails tails) {
    check_kind(dz, EffectKind::dz);
    check_alpha(alpha);
    if (n_pairs < 2) throw DomainError("paired t test needs at least 2 pairs");
    const double n = n_pairs;
    return t_power(dz, n - 1.0, dz.value * std::sqrt(n), alpha, tails);
}

PowerResult power_oneway_anova(const EffectSize& f, int k, int total_n, double alpha) {
    check_kind(f, EffectKind::f);
    check_alpha(alpha);
    if (k < 2) throw DomainError("one-way ANOVA needs at least 2 groups");
    if (total_n <= k) throw DomainError("one-way ANOVA needs total N > k");
    const double n = total_n;
    return f_power(f, k - 1.0, n - k, f.value * f.value * n, alpha);
}

PowerResult power_rm_within(const EffectSize& f_squared, int k, int m, int total_n, double epsilon,
                            double alpha) {
    check_kind(f_squared, EffectKind::f_squared);
    check_alpha(alpha);
    if (k < 1) throw DomainError("repeated-measures ANOVA needs at least 1 group");
    if (m < 2) throw DomainError("repeated-measures ANOVA needs at least 2 measurements");
    if (total_n <= k) throw DomainError("repeated-measures ANOVA needs total N > k");
    const double lower = 1.0 / (m - 1.0);
    if (!(epsilon >= lower - 1e-12 && epsilon <= 1.0))
        throw DomainError("epsilon must lie in [1/(m-1), 1]");
    const double n = total_n;
    const double df1 = (m - 1.0) * epsilon;
    const double df2 = (n - k) * (m - 1.0) * epsilon;
    return f_power(f_squared, df1, df2, f_squared.value * n * epsilon, alpha);
}

PowerResult compute_power(const DesignSpec& spec) {
    return std::visit(
        [&](const auto& d) -> PowerResult {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, IndependentTDesign>)
                return power_independent_t(d.d, d.n1, d.n2, spec.alpha, spec.tails);
            else if constexpr (std::is_same_v<T, PairedTDesign>)
                return power_paired_t(d.dz, d.n_pairs, spec.alpha, spec.tails);
            else if constexpr (std::is_same_v<T, OneWayAnovaDesign>)
                return power_oneway_anova(d.f, d.k, d.total_n, spec.alpha);
            else
                return power_rm_within(d.f_squared, d.k, d.m, d.total_n, d.epsilon, spec.alpha);
        },
        spec.design);
}

DesignSpec with_sample_size(const DesignSpec& spec, std::int64_t n) {
    DesignSpec out = spec;
    const int size = static_cast<int>(n);
    std::visit(
        [&](auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, IndependentTDesign>) {
                d.n1 = size;
                d.n2 = size;
            } else if constexpr (std::is_same_v<T, PairedTDesign>) {
                d.n_pairs = size;
            } else {
                d.total_n = size;
            }
        },
        out.design);
    return out;
}

SampleSizeResult solve_min_n(const DesignSpec& spec, double target_power, double drop_rate) {
    check_alpha(spec.alpha);
    if (!(target_power > 0.0 && target_power < 1.0)) throw DomainError("target power must lie in (0, 1)");
    if (!(target_power > spec.alpha)) throw DomainError("target power must exceed alpha");
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw DomainError("drop rate must lie in [0, 1)");
    if (!(spec.effect().value > 0.0))
        throw UnreachableTarget("target power is unreachable with a zero effect size", kSampleSizeCap);

    const SearchPlan plan = plan_for(spec);
    const std::int64_t max_unit = kSampleSizeCap / plan.step;
    auto power_at = [&](std::int64_t unit) { return compute_power(with_sample_size(spec, unit * plan.step)).power; };

    std::int64_t lo = plan.min_unit - 1;  // power(lo) < target, or lo below the valid range
    std::int64_t hi = plan.min_unit;
    double hi_power = power_at(hi);
    while (hi_power < target_power) {
        if (hi >= max_unit)
            throw UnreachableTarget("target power not reached below the sample size cap of " +
                                        std::to_string(kSampleSizeCap),
                                    kSampleSizeCap);
        lo = hi;
        hi = std::min(hi * 2, max_unit);
        hi_power = power_at(hi);
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        const double p = power_at(mid);
        if (p >= target_power) {
            hi = mid;
            hi_power = p;
        } else {
            lo = mid;
        }
    }

    SampleSizeResult r;
    r.min_n = hi * plan.step;
    r.granularity = plan.granularity;
    r.achieved_power = hi_power;
    r.drop_rate = drop_rate;
    r.final_n = apply_drop_rate(r.min_n, drop_rate);
    return r;
}

std::int64_t apply_drop_rate(std::int64_t min_n, double drop_rate) {
    if (min_n < 1) throw DomainError("sample size must be at least 1");
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw DomainError("drop rate must lie in [0, 1)");
    const double q = static_cast<double>(min_n) / (1.0 - drop_rate);
    // Quotients that are integers in exact decimal arithmetic must not be
    // pushed up by binary rounding of 1 - drop_rate.
    const double nearest = std::round(q);
    if (std::fabs(q - nearest) <= 1e-12 * q) return static_cast<std::int64_t>(nearest);
    return static_cast<std::int64_t>(std::ceil(q));
}

std::vector<CurvePoint> pvalue_power_curve(const PairedDiffSummary& p, int n_min, int n_max, double alpha,
                                           Tails tails) {
    if (!std::isfinite(p.mean_diff)) throw DomainError("mean difference must be finite");
    if (!(p.sd_diff > 0.0) || !std::isfinite(p.sd_diff)) throw DomainError("sd of differences must be positive");
    if (n_min < 2 || n_max < n_min) throw DomainError("curve range must satisfy 2 <= n_min <= n_max");
    check_alpha(alpha);

    const EffectSize dz = cohen_dz({p.mean_diff, p.sd_diff, n_min});
    std::vector<CurvePoint> out;
    out.reserve(static_cast<std::size_t>(n_max - n_min + 1));
    for (int n = n_min; n <= n_max; ++n) {
        CurvePoint c;
        c.n = n;
        c.t_stat = p.mean_diff / (p.sd_diff / std::sqrt(static_cast<double>(n)));
        const double tail = t_cdf(-std::fabs(c.t_stat), Dof(n - 1.0));
        c.p_value = tails == Tails::two ? std::fmin(1.0, 2.0 * tail) : tail;
        c.power = power_paired_t(dz, n, alpha, tails).power;
        out.push_back(c);
    }
    return out;
}

}  // namespace powerwb
