#include "powerwb/analyze.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "format.hpp"
#include "powerwb/effect_size.hpp"
#include "powerwb/errors.hpp"
#include "powerwb/power_engine.hpp"

#ifndef POWERWB_VERSION
#define POWERWB_VERSION "0.0.0"
#endif

namespace powerwb {

using nlohmann::json;

namespace {

// Structural problem with the request body (maps to 400).
class RequestError : public std::runtime_error {
public:
    explicit RequestError(const std::string& message, std::vector<std::string> missing = {})
        : std::runtime_error(with_fields(message, missing)), missing_(std::move(missing)) {}
    const std::vector<std::string>& missing() const { return missing_; }

private:
    static std::string with_fields(const std::string& message, const std::vector<std::string>& fields) {
        std::string out = message;
        for (std::size_t i = 0; i < fields.size(); ++i) out += (i == 0 ? ": " : ", ") + fields[i];
        return out;
    }

    std::vector<std::string> missing_;
};

// Field access with path-qualified diagnostics. Missing fields are collected
// so that a single 400 can list all of them.
class Fields {
public:
    Fields(const json& object, std::string path, std::vector<std::string>& missing)
        : object_(object), path_(std::move(path)), missing_(missing) {
        if (!object_.is_object()) throw RequestError("'" + display() + "' must be a JSON object");
    }

    bool has(const char* key) const { return object_.contains(key) && !object_.at(key).is_null(); }

    std::optional<double> number(const char* key, bool required = true) const {
        if (!has(key)) {
            if (required) missing_.push_back(qualified(key));
            return std::nullopt;
        }
        const auto& v = object_.at(key);
        if (!v.is_number()) throw RequestError("'" + qualified(key) + "' must be a number");
        return v.get<double>();
    }

    std::optional<int> integer(const char* key, bool required = true) const {
        if (!has(key)) {
            if (required) missing_.push_back(qualified(key));
            return std::nullopt;
        }
        const auto& v = object_.at(key);
        if (v.is_number_integer()) {
            if (v.is_number_unsigned() ? v.get<std::uint64_t>() > 2147483647u
                                       : (v.get<std::int64_t>() > 2147483647 || v.get<std::int64_t>() < -2147483647))
                throw RequestError("'" + qualified(key) + "' is out of range");
            return static_cast<int>(v.get<std::int64_t>());
        }
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (std::floor(d) == d && std::fabs(d) < 2147483647.0) return static_cast<int>(d);
        }
        throw RequestError("'" + qualified(key) + "' must be an integer");
    }

    std::optional<std::string> text(const char* key, bool required = true) const {
        if (!has(key)) {
            if (required) missing_.push_back(qualified(key));
            return std::nullopt;
        }
        const auto& v = object_.at(key);
        if (!v.is_string()) throw RequestError("'" + qualified(key) + "' must be a string");
        return v.get<std::string>();
    }

    const json* child(const char* key, bool required = true) const {
        if (!has(key)) {
            if (required) missing_.push_back(qualified(key));
            return nullptr;
        }
        return &object_.at(key);
    }

    std::string qualified(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string display() const { return path_.empty() ? "request" : path_; }

    const json& object_;
    std::string path_;
    std::vector<std::string>& missing_;
};

enum class Analysis { post_hoc, a_priori, curve };

Analysis analysis_from_string(const std::string& s) {
    if (s == "post_hoc") return Analysis::post_hoc;
    if (s == "a_priori") return Analysis::a_priori;
    if (s == "curve") return Analysis::curve;
    throw RequestError("'analysis' must be one of post_hoc, a_priori, curve");
}

bool is_t_family(Family f) { return f == Family::independent_t || f == Family::paired_t; }

EffectKind expected_kind(Family f) {
    switch (f) {
        case Family::independent_t: return EffectKind::d;
        case Family::paired_t: return EffectKind::dz;
        case Family::oneway_anova: return EffectKind::f;
        case Family::rm_within: return EffectKind::f_squared;
    }
    return EffectKind::d;
}

// Unvalidated numbers from the request; the engine enforces domains.
GroupSummary read_group(const json& node, const std::string& path, std::vector<std::string>& missing) {
    Fields g(node, path, missing);
    GroupSummary out;
    out.mean = g.number("mean").value_or(0.0);
    out.n = g.integer("n").value_or(0);
    const bool has_sd = g.has("sd");
    const bool has_se = g.has("se");
    if (has_sd && has_se) throw RequestError("'" + path + "' must give either sd or se, not both");
    if (has_se) {
        const double se = *g.number("se");
        if (!missing.empty()) return out;
        out.sd = sd_from_se(se, out.n);
    } else {
        out.sd = g.number("sd").value_or(0.0);
    }
    return out;
}

json effect_json(const EffectSize& e) {
    return {{"kind", std::string(to_string(e.kind))}, {"value", e.value}, {"derivation", e.derivation}};
}

json power_json(const PowerResult& r) {
    json j;
    j["effect_size"] = {{"kind", std::string(to_string(r.effect.kind))}, {"value", r.effect.value}};
    j["noncentrality"] = r.noncentrality;
    j["df1"] = r.df1;
    j["df2"] = r.df2 ? json(*r.df2) : json(nullptr);
    j["critical_value"] = r.critical_value;
    j["power"] = r.power;
    return j;
}

json error_body(int status, const std::string& code, const std::string& message,
                const std::vector<std::string>& missing = {}) {
    json err = {{"status", status}, {"code", code}, {"message", message}};
    if (!missing.empty()) err["missing_fields"] = missing;
    return {{"engine_version", engine_version()}, {"error", err}};
}

AnalyzeOutcome run(const json& request) {
    std::vector<std::string> missing;
    Fields top(request, "", missing);

    const auto analysis_name = top.text("analysis");
    const auto family_name = top.text("family");
    const auto alpha = top.number("alpha");
    if (!missing.empty()) throw RequestError("missing required fields", missing);

    const Analysis analysis = analysis_from_string(*analysis_name);
    Family family;
    try {
        family = family_from_string(*family_name);
    } catch (const DomainError&) {
        throw RequestError("'family' must be one of independent_t, paired_t, oneway_anova, rm_within");
    }

    Tails tails = Tails::two;
    if (is_t_family(family)) {
        if (auto t = top.text("tails", false)) {
            if (*t != "one" && *t != "two") throw RequestError("'tails' must be 'one' or 'two'");
            tails = tails_from_string(*t);
        }
    }
    std::optional<double> target_power;
    std::optional<double> drop_rate;
    if (analysis == Analysis::a_priori) {
        target_power = top.number("target_power");
        drop_rate = top.number("drop_rate");
    }
    std::optional<int> n_min;
    std::optional<int> n_max;
    if (analysis == Analysis::curve) {
        if (family != Family::paired_t) throw RequestError("curve analysis is only defined for family paired_t");
        if (const json* c = top.child("curve")) {
            Fields cf(*c, "curve", missing);
            n_min = cf.integer("n_min");
            n_max = cf.integer("n_max");
        }
    }

    const bool has_summaries = top.has("summaries");
    const bool has_effect = top.has("effect_size");
    if (has_summaries && has_effect) throw RequestError("give either 'summaries' or 'effect_size', not both");
    if (!has_summaries && !has_effect) missing.push_back("summaries|effect_size");
    if (analysis == Analysis::curve && has_effect)
        throw RequestError("curve analysis needs 'summaries' (mean_diff, sd_diff)");

    std::optional<Fields> design;
    if (top.has("design")) design.emplace(request.at("design"), "design", missing);

    // Collect everything before touching the engine so that all missing
    // fields are reported at once.
    std::optional<EffectSize> effect;
    DesignSpec spec;
    spec.alpha = *alpha;
    spec.tails = tails;
    std::optional<PairedDiffSummary> paired_summary;

    auto design_int = [&](const char* key, std::optional<int> fallback, bool needed) -> int {
        std::optional<int> v;
        if (design) v = design->integer(key, false);
        if (!v) v = fallback;
        if (!v) {
            if (needed) missing.push_back(std::string("design.") + key);
            return 0;
        }
        return *v;
    };
    auto design_number = [&](const char* key, bool needed) -> double {
        std::optional<double> v;
        if (design) v = design->number(key, false);
        if (!v) {
            if (needed) missing.push_back(std::string("design.") + key);
            return 0.0;
        }
        return *v;
    };

    const bool sizes_needed = analysis == Analysis::post_hoc;

    // Deferred effect computation: domain errors surface after the 400 checks.
    std::function<EffectSize()> make_effect;
    if (has_effect) {
        Fields e(request.at("effect_size"), "effect_size", missing);
        const auto kind = e.text("kind");
        const auto value = e.number("value");
        if (kind) {
            EffectKind k;
            try {
                k = effect_kind_from_string(*kind);
            } catch (const DomainError&) {
                throw RequestError("'effect_size.kind' must be one of d, dz, f, f_squared");
            }
            if (k != expected_kind(family))
                throw RequestError("family " + std::string(to_string(family)) + " expects effect_size.kind '" +
                                   std::string(to_string(expected_kind(family))) + "'");
            if (value) make_effect = [k, v = *value] { return EffectSize::make(k, v, "given"); };
        }
    }

    switch (family) {
        case Family::independent_t: {
            std::optional<int> n1, n2;
            if (has_summaries) {
                Fields s(request.at("summaries"), "summaries", missing);
                const json* g1 = s.child("group1");
                const json* g2 = s.child("group2");
                if (g1 && g2) {
                    auto a = read_group(*g1, "summaries.group1", missing);
                    auto b = read_group(*g2, "summaries.group2", missing);
                    n1 = a.n;
                    n2 = b.n;
                    make_effect = [a, b] { return cohen_d(a, b); };
                }
            }
            IndependentTDesign d;
            d.n1 = design_int("n1", n1, sizes_needed);
            d.n2 = design_int("n2", n2, sizes_needed);
            spec.design = d;
            break;
        }
        case Family::paired_t: {
            std::optional<int> n;
            if (has_summaries) {
                Fields s(request.at("summaries"), "summaries", missing);
                PairedDiffSummary p;
                p.mean_diff = s.number("mean_diff").value_or(0.0);
                p.sd_diff = s.number("sd_diff").value_or(0.0);
                n = s.integer("n", false);
                p.n = n.value_or(2);
                paired_summary = p;
                make_effect = [p] { return cohen_dz(p); };
            }
            PairedTDesign d;
            d.n_pairs = design_int("n", n, sizes_needed);
            spec.design = d;
            break;
        }
        case Family::oneway_anova: {
            std::optional<int> k, total;
            if (has_summaries) {
                Fields s(request.at("summaries"), "summaries", missing);
                const json* groups = s.child("groups");
                if (groups) {
                    if (!groups->is_array()) throw RequestError("'summaries.groups' must be an array");
                    std::vector<GroupSummary> gs;
                    for (std::size_t i = 0; i < groups->size(); ++i)
                        gs.push_back(read_group((*groups)[i], "summaries.groups[" + std::to_string(i) + "]", missing));
                    const auto sd_within = s.number("sd_within", false);
                    k = static_cast<int>(gs.size());
                    int sum = 0;
                    for (const auto& g : gs) sum += g.n;
                    total = sum;
                    make_effect = [gs, sd_within] {
                        const double sd = sd_within ? *sd_within : pooled_sd(gs);
                        auto f = cohen_f_from_means(gs, sd);
                        if (!sd_within) f.derivation += " (pooled estimate)";
                        return f;
                    };
                }
            }
            OneWayAnovaDesign d;
            d.k = design_int("k", k, true);
            d.total_n = design_int("n_total", total, sizes_needed);
            spec.design = d;
            break;
        }
        case Family::rm_within: {
            if (has_summaries) {
                Fields s(request.at("summaries"), "summaries", missing);
                VarianceComponents v;
                v.ss_effect = s.number("ss_effect").value_or(0.0);
                v.ss_error = s.number("ss_error").value_or(0.0);
                make_effect = [v] { return f_squared_from_variances(v); };
            }
            RmWithinDesign d;
            d.k = design_int("k", std::nullopt, true);
            d.m = design_int("m", std::nullopt, true);
            d.total_n = design_int("n_total", std::nullopt, sizes_needed);
            d.epsilon = design_number("epsilon", true);
            spec.design = d;
            break;
        }
    }
    if (!missing.empty()) throw RequestError("missing required fields", missing);

    // From here on, failures are domain errors (422).
    effect = make_effect();
    std::visit(
        [&](auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, IndependentTDesign>)
                d.d = *effect;
            else if constexpr (std::is_same_v<T, PairedTDesign>)
                d.dz = *effect;
            else if constexpr (std::is_same_v<T, OneWayAnovaDesign>)
                d.f = *effect;
            else
                d.f_squared = *effect;
        },
        spec.design);

    json body;
    body["engine_version"] = engine_version();
    body["request"] = request;
    body["effect_size"] = effect_json(*effect);
    body["warnings"] = effect->warnings;

    switch (analysis) {
        case Analysis::post_hoc:
            body["power_result"] = power_json(compute_power(spec));
            break;
        case Analysis::a_priori: {
            const auto r = solve_min_n(spec, *target_power, *drop_rate);
            json s;
            s["min_n"] = r.min_n;
            s["granularity"] = std::string(to_string(r.granularity));
            s["achieved_power"] = r.achieved_power;
            s["drop_rate"] = r.drop_rate;
            s["final_n"] = r.final_n;
            if (r.granularity == Granularity::total) {
                const int k = std::holds_alternative<OneWayAnovaDesign>(spec.design)
                                  ? std::get<OneWayAnovaDesign>(spec.design).k
                                  : std::get<RmWithinDesign>(spec.design).k;
                s["k"] = k;
                s["per_group_n"] = r.min_n / k;
            }
            body["sample_size_result"] = s;
            body["power_result"] = power_json(compute_power(with_sample_size(spec, r.min_n)));
            break;
        }
        case Analysis::curve: {
            json points = json::array();
            for (const auto& c : pvalue_power_curve(*paired_summary, *n_min, *n_max, spec.alpha, tails))
                points.push_back({{"n", c.n}, {"t_stat", c.t_stat}, {"p_value", c.p_value}, {"power", c.power}});
            body["curve"] = points;
            break;
        }
    }
    return {200, body};
}

}  // namespace

std::string engine_version() { return std::string("powerwb ") + POWERWB_VERSION; }

AnalyzeOutcome analyze(const json& request) {
    try {
        return run(request);
    } catch (const RequestError& e) {
        return {400, error_body(400, "invalid_request", e.what(), e.missing())};
    } catch (const json::exception& e) {
        return {400, error_body(400, "invalid_request", e.what())};
    } catch (const DomainError& e) {
        return {422, error_body(422, "domain_error", e.what())};
    } catch (const UnreachableTarget& e) {
        return {422, error_body(422, "unreachable_target", e.what())};
    } catch (const InternalError& e) {
        return {500, error_body(500, "internal_error", e.what())};
    }
}

AnalyzeOutcome analyze_body(std::string_view body) {
    json request;
    try {
        request = json::parse(body);
    } catch (const json::parse_error& e) {
        return {400, error_body(400, "malformed_json", e.what())};
    }
    return analyze(request);
}

namespace {

std::string unit_label(const json& s, bool with_cells) {
    const auto g = s.at("granularity").get<std::string>();
    if (g == "per_group") return "per group";
    if (g == "pairs") return "pairs";
    std::string out = "total";
    if (with_cells && s.contains("per_group_n"))
        out += ", " + std::to_string(s.at("per_group_n").get<std::int64_t>()) + " per group";
    return out;
}

void line(std::string& out, const char* key, const std::string& value) {
    std::string k = key;
    k.resize(16, ' ');
    out += k + value + '\n';
}

}  // namespace

std::string render_response_text(const json& response) {
    using detail::fixed;
    if (response.contains("error"))
        return "error: " + response.at("error").at("message").get<std::string>() + '\n';

    const json& req = response.at("request");
    std::string out;
    line(out, "family", req.at("family").get<std::string>());
    line(out, "analysis", req.at("analysis").get<std::string>());
    const json& e = response.at("effect_size");
    line(out, "effect size",
         e.at("kind").get<std::string>() + " = " + fixed(e.at("value").get<double>(), 4) + "  (" +
             e.at("derivation").get<std::string>() + ")");
    std::string alpha = detail::compact(req.at("alpha").get<double>());
    if (req.contains("tails") && (req.at("family") == "independent_t" || req.at("family") == "paired_t"))
        alpha += " (" + req.at("tails").get<std::string>() + "-tailed)";
    line(out, "alpha", alpha);

    if (response.contains("power_result")) {
        const json& p = response.at("power_result");
        if (p.at("df2").is_null()) {
            line(out, "df", detail::compact(p.at("df1").get<double>()));
        } else {
            line(out, "df1", detail::compact(p.at("df1").get<double>()));
            line(out, "df2", detail::compact(p.at("df2").get<double>()));
        }
        line(out, "noncentrality", fixed(p.at("noncentrality").get<double>(), 4));
        line(out, "critical value", fixed(p.at("critical_value").get<double>(), 4));
        if (!response.contains("sample_size_result")) line(out, "power", fixed(p.at("power").get<double>(), 4));
    }
    if (response.contains("sample_size_result")) {
        const json& s = response.at("sample_size_result");
        line(out, "target power", detail::compact(req.at("target_power").get<double>()));
        line(out, "min N", std::to_string(s.at("min_n").get<std::int64_t>()) + " (" + unit_label(s, true) + ")");
        line(out, "achieved power", fixed(s.at("achieved_power").get<double>(), 4));
        line(out, "drop rate", fixed(s.at("drop_rate").get<double>(), 2));
        line(out, "final N", std::to_string(s.at("final_n").get<std::int64_t>()) + " (" + unit_label(s, false) + ")");
    }
    for (const auto& w : response.at("warnings")) out += "warning: " + w.get<std::string>() + '\n';
    return out;
}

std::string render_curve_csv(const json& response) {
    using detail::fixed;
    std::string out = "n,t_stat,p_value,power\n";
    for (const auto& c : response.at("curve")) {
        out += std::to_string(c.at("n").get<int>()) + ',' + fixed(c.at("t_stat").get<double>(), 6) + ',' +
               fixed(c.at("p_value").get<double>(), 6) + ',' + fixed(c.at("power").get<double>(), 4) + '\n';
    }
    return out;
}

}  // namespace powerwb
