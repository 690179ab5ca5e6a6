#include "powerwb/powerwb.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "powerwb/analyze.hpp"
#include "powerwb/distributions.hpp"
#include "powerwb/effect_size.hpp"
#include "powerwb/errors.hpp"
#include "powerwb/power_engine.hpp"
#include "powerwb/service.hpp"
#include "powerwb/study_audit.hpp"

using namespace powerwb;

struct pwb_curve {
    std::vector<CurvePoint> points;
};

struct pwb_audit_report {
    AuditReport report;
    std::vector<std::string> reported;  // stable storage for pwb_audit_row::reported_p
};

struct pwb_server {
    Service service;
};

namespace {

thread_local std::string last_error;

pwb_status fail(pwb_status status, const std::string& message) {
    last_error = message;
    return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
pwb_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return PWB_OK;
    } catch (const DomainError& e) {
        return fail(PWB_ERR_DOMAIN, e.what());
    } catch (const UnreachableTarget& e) {
        return fail(PWB_ERR_UNREACHABLE, e.what());
    } catch (const ParseError& e) {
        return fail(PWB_ERR_PARSE, e.what());
    } catch (const InternalError& e) {
        return fail(PWB_ERR_INTERNAL, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PWB_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PWB_ERR_INTERNAL, e.what());
    }
}

#define PWB_REQUIRE(ptr)                                                                  \
    do {                                                                                  \
        if ((ptr) == nullptr) return fail(PWB_ERR_INVALID_ARGUMENT, #ptr " is NULL");     \
    } while (0)

char* duplicate(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bool valid_tails(pwb_tails t) { return t == PWB_TAILS_ONE || t == PWB_TAILS_TWO; }
bool valid_family(pwb_family f) { return f >= PWB_FAMILY_INDEPENDENT_T && f <= PWB_FAMILY_RM_WITHIN; }
Tails to_tails(pwb_tails t) { return t == PWB_TAILS_ONE ? Tails::one : Tails::two; }
Family to_family(pwb_family f) { return static_cast<Family>(f); }

GroupSummary to_group(const pwb_group_summary& g) { return {g.mean, g.sd, g.n}; }

std::vector<GroupSummary> to_groups(const pwb_group_summary* groups, size_t count) {
    std::vector<GroupSummary> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) out.push_back(to_group(groups[i]));
    return out;
}

DesignSpec to_spec(const pwb_design& d) {
    DesignSpec spec;
    spec.alpha = d.alpha;
    spec.tails = to_tails(d.tails);
    switch (d.family) {
        case PWB_FAMILY_INDEPENDENT_T:
            spec.design = IndependentTDesign{EffectSize::make(EffectKind::d, d.effect), d.n1, d.n2};
            break;
        case PWB_FAMILY_PAIRED_T:
            spec.design = PairedTDesign{EffectSize::make(EffectKind::dz, d.effect), d.n};
            break;
        case PWB_FAMILY_ONEWAY_ANOVA:
            spec.design = OneWayAnovaDesign{EffectSize::make(EffectKind::f, d.effect), d.k, d.n};
            break;
        case PWB_FAMILY_RM_WITHIN:
            spec.design = RmWithinDesign{EffectSize::make(EffectKind::f_squared, d.effect), d.k, d.m, d.n, d.epsilon};
            break;
    }
    return spec;
}

pwb_status check_design(const pwb_design* d) {
    PWB_REQUIRE(d);
    if (!valid_family(d->family)) return fail(PWB_ERR_INVALID_ARGUMENT, "unknown family");
    if (!valid_tails(d->tails)) return fail(PWB_ERR_INVALID_ARGUMENT, "unknown tails");
    return PWB_OK;
}

pwb_status status_for_http(int http) {
    switch (http) {
        case 200: return PWB_OK;
        case 400: return PWB_ERR_INVALID_ARGUMENT;
        case 422: return PWB_ERR_DOMAIN;
        default: return PWB_ERR_INTERNAL;
    }
}

}  // namespace

extern "C" {

PWB_API const char* pwb_version(void) {
    static const std::string version = engine_version();
    return version.c_str();
}

PWB_API const char* pwb_last_error(void) { return last_error.c_str(); }

PWB_API const char* pwb_status_string(pwb_status status) {
    switch (status) {
        case PWB_OK: return "ok";
        case PWB_ERR_INVALID_ARGUMENT: return "invalid argument";
        case PWB_ERR_DOMAIN: return "domain error";
        case PWB_ERR_UNREACHABLE: return "unreachable target";
        case PWB_ERR_PARSE: return "parse error";
        case PWB_ERR_IO: return "i/o error";
        case PWB_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

PWB_API void pwb_string_free(char* s) { std::free(s); }

PWB_API pwb_status pwb_reg_inc_beta(double x, double a, double b, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = reg_inc_beta(x, a, b); });
}

PWB_API pwb_status pwb_t_cdf(double x, double df, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = t_cdf(x, Dof(df)); });
}

PWB_API pwb_status pwb_t_quantile(double p, double df, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = t_quantile(p, Dof(df)); });
}

PWB_API pwb_status pwb_nct_cdf(double x, double df, double delta, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = nct_cdf(x, Dof(df), Noncentrality(delta)); });
}

PWB_API pwb_status pwb_f_cdf(double x, double df1, double df2, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = f_cdf(x, Dof(df1), Dof(df2)); });
}

PWB_API pwb_status pwb_f_quantile(double p, double df1, double df2, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = f_quantile(p, Dof(df1), Dof(df2)); });
}

PWB_API pwb_status pwb_ncf_cdf(double x, double df1, double df2, double lambda, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = ncf_cdf(x, Dof(df1), Dof(df2), Noncentrality(lambda)); });
}

PWB_API pwb_status pwb_sd_from_se(double se, int n, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = sd_from_se(se, n); });
}

PWB_API pwb_status pwb_cohen_d(const pwb_group_summary* g1, const pwb_group_summary* g2, double* out) {
    PWB_REQUIRE(g1);
    PWB_REQUIRE(g2);
    PWB_REQUIRE(out);
    return guarded([&] { *out = cohen_d(to_group(*g1), to_group(*g2)).value; });
}

PWB_API pwb_status pwb_cohen_dz(double mean_diff, double sd_diff, int n, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = cohen_dz({mean_diff, sd_diff, n}).value; });
}

PWB_API pwb_status pwb_pooled_sd(const pwb_group_summary* groups, size_t count, double* out) {
    PWB_REQUIRE(out);
    if (count > 0) PWB_REQUIRE(groups);
    return guarded([&] { *out = pooled_sd(to_groups(groups, count)); });
}

PWB_API pwb_status pwb_cohen_f_from_means(const pwb_group_summary* groups, size_t count, double sd_within,
                                          double* out) {
    PWB_REQUIRE(out);
    if (count > 0) PWB_REQUIRE(groups);
    return guarded([&] { *out = cohen_f_from_means(to_groups(groups, count), sd_within).value; });
}

PWB_API pwb_status pwb_f_squared_from_variances(double ss_effect, double ss_error, double* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = f_squared_from_variances({ss_effect, ss_error}).value; });
}

PWB_API void pwb_design_init(pwb_design* design, pwb_family family) {
    if (!design) return;
    *design = pwb_design{};
    design->family = family;
    design->alpha = 0.05;
    design->tails = PWB_TAILS_TWO;
    design->epsilon = 1.0;
}

PWB_API pwb_status pwb_power(const pwb_design* design, pwb_power_result* out) {
    if (auto s = check_design(design); s != PWB_OK) return s;
    PWB_REQUIRE(out);
    return guarded([&] {
        const PowerResult r = compute_power(to_spec(*design));
        out->effect_kind = static_cast<pwb_effect_kind>(r.effect.kind);
        out->effect = r.effect.value;
        out->noncentrality = r.noncentrality;
        out->df1 = r.df1;
        out->df2 = r.df2 ? *r.df2 : std::numeric_limits<double>::quiet_NaN();
        out->critical_value = r.critical_value;
        out->power = r.power;
    });
}

PWB_API pwb_status pwb_solve_min_n(const pwb_design* design, double target_power, double drop_rate,
                                   pwb_sample_size_result* out) {
    if (auto s = check_design(design); s != PWB_OK) return s;
    PWB_REQUIRE(out);
    return guarded([&] {
        const SampleSizeResult r = solve_min_n(to_spec(*design), target_power, drop_rate);
        out->min_n = r.min_n;
        out->granularity = static_cast<pwb_granularity>(r.granularity);
        out->achieved_power = r.achieved_power;
        out->drop_rate = r.drop_rate;
        out->final_n = r.final_n;
    });
}

PWB_API pwb_status pwb_apply_drop_rate(int64_t min_n, double drop_rate, int64_t* out) {
    PWB_REQUIRE(out);
    return guarded([&] { *out = apply_drop_rate(min_n, drop_rate); });
}

PWB_API pwb_status pwb_curve_create(double mean_diff, double sd_diff, int n_min, int n_max, double alpha,
                                    pwb_tails tails, pwb_curve** out) {
    PWB_REQUIRE(out);
    *out = nullptr;
    if (!valid_tails(tails)) return fail(PWB_ERR_INVALID_ARGUMENT, "unknown tails");
    return guarded([&] {
        auto curve = std::make_unique<pwb_curve>();
        curve->points = pvalue_power_curve({mean_diff, sd_diff, n_min}, n_min, n_max, alpha, to_tails(tails));
        *out = curve.release();
    });
}

PWB_API size_t pwb_curve_size(const pwb_curve* curve) { return curve ? curve->points.size() : 0; }

PWB_API pwb_status pwb_curve_point_at(const pwb_curve* curve, size_t index, pwb_curve_point* out) {
    PWB_REQUIRE(curve);
    PWB_REQUIRE(out);
    if (index >= curve->points.size()) return fail(PWB_ERR_INVALID_ARGUMENT, "curve index out of range");
    const CurvePoint& c = curve->points[index];
    *out = pwb_curve_point{c.n, c.t_stat, c.p_value, c.power};
    return PWB_OK;
}

PWB_API void pwb_curve_destroy(pwb_curve* curve) { delete curve; }

PWB_API void pwb_audit_config_init(pwb_audit_config* config) {
    if (!config) return;
    config->alpha = 0.05;
    config->tails = PWB_TAILS_TWO;
    config->target_power = 0.8;
    config->drop_rate = 0.10;
}

PWB_API pwb_status pwb_audit_csv(const char* csv, size_t length, pwb_family family, const pwb_audit_config* config,
                                 pwb_audit_report** out) {
    PWB_REQUIRE(out);
    *out = nullptr;
    if (length > 0) PWB_REQUIRE(csv);
    PWB_REQUIRE(config);
    if (!valid_family(family)) return fail(PWB_ERR_INVALID_ARGUMENT, "unknown family");
    if (!valid_tails(config->tails)) return fail(PWB_ERR_INVALID_ARGUMENT, "unknown tails");
    return guarded([&] {
        const auto rows = parse_study_csv(std::string_view(csv ? csv : "", length), to_family(family));
        AuditConfig c;
        c.alpha = config->alpha;
        c.tails = to_tails(config->tails);
        c.target_power = config->target_power;
        c.drop_rate = config->drop_rate;
        auto handle = std::make_unique<pwb_audit_report>();
        handle->report = audit(rows, c);
        for (const auto& row : handle->report.rows) handle->reported.push_back(row.reported_p.value_or(""));
        *out = handle.release();
    });
}

PWB_API size_t pwb_audit_report_size(const pwb_audit_report* report) {
    return report ? report->report.rows.size() : 0;
}

PWB_API pwb_status pwb_audit_report_row(const pwb_audit_report* report, size_t index, pwb_audit_row* out) {
    PWB_REQUIRE(report);
    PWB_REQUIRE(out);
    if (index >= report->report.rows.size()) return fail(PWB_ERR_INVALID_ARGUMENT, "row index out of range");
    const AuditRow& row = report->report.rows[index];
    *out = pwb_audit_row{};
    out->label = row.label.c_str();
    out->status = static_cast<pwb_row_status>(row.status);
    out->has_effect = row.effect.has_value();
    if (row.effect) {
        out->effect_kind = static_cast<pwb_effect_kind>(row.effect->kind);
        out->effect = row.effect->value;
    }
    out->has_power = row.power.has_value();
    if (row.power) out->power = row.power->power;
    out->has_sample_size = row.sample_size.has_value();
    if (row.sample_size) {
        out->min_n = row.sample_size->min_n;
        out->final_n = row.sample_size->final_n;
        out->achieved_power = row.sample_size->achieved_power;
    }
    out->granularity = static_cast<pwb_granularity>(row.granularity);
    out->reported_p = report->reported[index].c_str();
    out->note = row.note.c_str();
    return PWB_OK;
}

PWB_API pwb_status pwb_audit_report_render(const pwb_audit_report* report, pwb_format format, char** out) {
    PWB_REQUIRE(report);
    PWB_REQUIRE(out);
    *out = nullptr;
    if (format != PWB_FORMAT_TEXT && format != PWB_FORMAT_CSV)
        return fail(PWB_ERR_INVALID_ARGUMENT, "audit reports render as text or csv");
    return guarded([&] {
        *out = duplicate(format == PWB_FORMAT_TEXT ? render_text(report->report) : render_csv(report->report));
    });
}

PWB_API void pwb_audit_report_destroy(pwb_audit_report* report) { delete report; }

PWB_API pwb_status pwb_analyze(const char* request_json, size_t length, pwb_format format, char** out,
                               int* http_status) {
    PWB_REQUIRE(out);
    *out = nullptr;
    if (length > 0) PWB_REQUIRE(request_json);
    if (format != PWB_FORMAT_JSON && format != PWB_FORMAT_TEXT && format != PWB_FORMAT_CSV)
        return fail(PWB_ERR_INVALID_ARGUMENT, "unknown format");
    pwb_status status = PWB_OK;
    const pwb_status guard = guarded([&] {
        const AnalyzeOutcome outcome = analyze_body(std::string_view(request_json ? request_json : "", length));
        if (http_status) *http_status = outcome.http_status;
        status = status_for_http(outcome.http_status);
        if (outcome.http_status == 422 && outcome.body.at("error").at("code") == "unreachable_target")
            status = PWB_ERR_UNREACHABLE;
        if (status != PWB_OK) last_error = outcome.body.at("error").at("message").get<std::string>();

        std::string rendered;
        if (format == PWB_FORMAT_JSON) {
            rendered = outcome.body.dump();
        } else if (status != PWB_OK) {
            rendered = render_response_text(outcome.body);
        } else if (format == PWB_FORMAT_CSV) {
            if (!outcome.body.contains("curve")) throw DomainError("CSV rendering is only defined for curve analyses");
            rendered = render_curve_csv(outcome.body);
        } else {
            rendered = outcome.body.contains("curve") ? render_curve_csv(outcome.body)
                                                      : render_response_text(outcome.body);
        }
        *out = duplicate(rendered);
    });
    return guard != PWB_OK ? guard : status;
}

PWB_API int pwb_default_port(void) { return default_port(); }

PWB_API pwb_status pwb_server_create(const char* host, int port, pwb_server** out) {
    PWB_REQUIRE(host);
    PWB_REQUIRE(out);
    *out = nullptr;
    if (port < 0 || port > 65535) return fail(PWB_ERR_INVALID_ARGUMENT, "port must lie in [0, 65535]");
    pwb_status io = PWB_OK;
    const pwb_status s = guarded([&] {
        auto server = std::make_unique<pwb_server>();
        if (!server->service.bind(host, port)) {
            io = fail(PWB_ERR_IO, "cannot bind " + std::string(host) + ":" + std::to_string(port));
            return;
        }
        *out = server.release();
    });
    return s != PWB_OK ? s : io;
}

PWB_API int pwb_server_port(const pwb_server* server) { return server ? server->service.port() : -1; }

PWB_API pwb_status pwb_server_run(pwb_server* server) {
    PWB_REQUIRE(server);
    if (!server->service.listen()) return fail(PWB_ERR_IO, "listen failed");
    return PWB_OK;
}

PWB_API void pwb_server_stop(pwb_server* server) {
    if (server) server->service.stop();
}

PWB_API void pwb_server_destroy(pwb_server* server) { delete server; }

}  // extern "C"
