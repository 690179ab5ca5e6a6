/*
 * powerwb C API.
 *
 * Every fallible call returns a pwb_status; on failure a description is
 * available from pwb_last_error() (per thread, valid until the next call on
 * that thread). Strings returned through char** are owned by the caller and
 * released with pwb_string_free(). Opaque handles are released with their
 * matching *_destroy function; destroying NULL is a no-op.
 */
#ifndef POWERWB_H
#define POWERWB_H

#include <stddef.h>
#include <stdint.h>

#if defined(POWERWB_BUILDING_LIBRARY)
#define PWB_API __attribute__((visibility("default")))
#else
#define PWB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pwb_status {
    PWB_OK = 0,
    PWB_ERR_INVALID_ARGUMENT = 1, /* null pointer, unknown enum, malformed request */
    PWB_ERR_DOMAIN = 2,           /* value outside the mathematical domain */
    PWB_ERR_UNREACHABLE = 3,      /* target power cannot be reached */
    PWB_ERR_PARSE = 4,            /* CSV input rejected */
    PWB_ERR_IO = 5,               /* socket bind / listen failure */
    PWB_ERR_INTERNAL = 6          /* numerical routine failed to converge */
} pwb_status;

typedef enum pwb_tails { PWB_TAILS_ONE = 1, PWB_TAILS_TWO = 2 } pwb_tails;

typedef enum pwb_family {
    PWB_FAMILY_INDEPENDENT_T = 0,
    PWB_FAMILY_PAIRED_T = 1,
    PWB_FAMILY_ONEWAY_ANOVA = 2,
    PWB_FAMILY_RM_WITHIN = 3
} pwb_family;

typedef enum pwb_effect_kind {
    PWB_EFFECT_D = 0,
    PWB_EFFECT_DZ = 1,
    PWB_EFFECT_F = 2,
    PWB_EFFECT_F_SQUARED = 3
} pwb_effect_kind;

typedef enum pwb_granularity {
    PWB_GRANULARITY_PER_GROUP = 0,
    PWB_GRANULARITY_PAIRS = 1,
    PWB_GRANULARITY_TOTAL = 2
} pwb_granularity;

typedef enum pwb_format { PWB_FORMAT_JSON = 0, PWB_FORMAT_TEXT = 1, PWB_FORMAT_CSV = 2 } pwb_format;

PWB_API const char* pwb_version(void);
PWB_API const char* pwb_last_error(void);
PWB_API const char* pwb_status_string(pwb_status status);
PWB_API void pwb_string_free(char* s);

/* Distributions */
PWB_API pwb_status pwb_reg_inc_beta(double x, double a, double b, double* out);
PWB_API pwb_status pwb_t_cdf(double x, double df, double* out);
PWB_API pwb_status pwb_t_quantile(double p, double df, double* out);
PWB_API pwb_status pwb_nct_cdf(double x, double df, double delta, double* out);
PWB_API pwb_status pwb_f_cdf(double x, double df1, double df2, double* out);
PWB_API pwb_status pwb_f_quantile(double p, double df1, double df2, double* out);
PWB_API pwb_status pwb_ncf_cdf(double x, double df1, double df2, double lambda, double* out);

/* Effect sizes */
typedef struct pwb_group_summary {
    double mean;
    double sd;
    int n;
} pwb_group_summary;

PWB_API pwb_status pwb_sd_from_se(double se, int n, double* out);
PWB_API pwb_status pwb_cohen_d(const pwb_group_summary* g1, const pwb_group_summary* g2, double* out);
PWB_API pwb_status pwb_cohen_dz(double mean_diff, double sd_diff, int n, double* out);
PWB_API pwb_status pwb_pooled_sd(const pwb_group_summary* groups, size_t count, double* out);
PWB_API pwb_status pwb_cohen_f_from_means(const pwb_group_summary* groups, size_t count, double sd_within,
                                          double* out);
PWB_API pwb_status pwb_f_squared_from_variances(double ss_effect, double ss_error, double* out);

/* Power engine. `effect` is d, dz, f or f^2 according to `family`. */
typedef struct pwb_design {
    pwb_family family;
    double alpha;
    pwb_tails tails; /* t families only */
    double effect;
    int n1;          /* independent t */
    int n2;          /* independent t */
    int n;           /* pairs (paired t) or total N (ANOVA families) */
    int k;           /* ANOVA families */
    int m;           /* repeated measures */
    double epsilon;  /* repeated measures */
} pwb_design;

/* Fills alpha .05, two tails, epsilon 1, everything else zero. */
PWB_API void pwb_design_init(pwb_design* design, pwb_family family);

typedef struct pwb_power_result {
    pwb_effect_kind effect_kind;
    double effect;
    double noncentrality;
    double df1;
    double df2; /* NaN for t families */
    double critical_value;
    double power;
} pwb_power_result;

typedef struct pwb_sample_size_result {
    int64_t min_n;
    pwb_granularity granularity;
    double achieved_power;
    double drop_rate;
    int64_t final_n;
} pwb_sample_size_result;

PWB_API pwb_status pwb_power(const pwb_design* design, pwb_power_result* out);
PWB_API pwb_status pwb_solve_min_n(const pwb_design* design, double target_power, double drop_rate,
                                   pwb_sample_size_result* out);
PWB_API pwb_status pwb_apply_drop_rate(int64_t min_n, double drop_rate, int64_t* out);

/* p-value / power curve for a paired difference summary */
typedef struct pwb_curve pwb_curve;

typedef struct pwb_curve_point {
    int n;
    double t_stat;
    double p_value;
    double power;
} pwb_curve_point;

PWB_API pwb_status pwb_curve_create(double mean_diff, double sd_diff, int n_min, int n_max, double alpha,
                                    pwb_tails tails, pwb_curve** out);
PWB_API size_t pwb_curve_size(const pwb_curve* curve);
PWB_API pwb_status pwb_curve_point_at(const pwb_curve* curve, size_t index, pwb_curve_point* out);
PWB_API void pwb_curve_destroy(pwb_curve* curve);

/* Study audit */
typedef struct pwb_audit_config {
    double alpha;
    pwb_tails tails;
    double target_power;
    double drop_rate;
} pwb_audit_config;

/* alpha .05, two tails, target power .8, drop rate .10 */
PWB_API void pwb_audit_config_init(pwb_audit_config* config);

typedef enum pwb_row_status {
    PWB_ROW_OK = 0,
    PWB_ROW_UNREACHABLE = 1,
    PWB_ROW_NOT_REPRODUCIBLE = 2,
    PWB_ROW_ERROR = 3
} pwb_row_status;

/* String members stay valid until the owning report is destroyed. */
typedef struct pwb_audit_row {
    const char* label;
    pwb_row_status status;
    int has_effect;
    pwb_effect_kind effect_kind;
    double effect;
    int has_power;
    double power;
    int has_sample_size;
    int64_t min_n;
    int64_t final_n;
    double achieved_power;
    pwb_granularity granularity;
    const char* reported_p; /* empty when absent */
    const char* note;
} pwb_audit_row;

typedef struct pwb_audit_report pwb_audit_report;

PWB_API pwb_status pwb_audit_csv(const char* csv, size_t length, pwb_family family, const pwb_audit_config* config,
                                 pwb_audit_report** out);
PWB_API size_t pwb_audit_report_size(const pwb_audit_report* report);
PWB_API pwb_status pwb_audit_report_row(const pwb_audit_report* report, size_t index, pwb_audit_row* out);
/* PWB_FORMAT_TEXT or PWB_FORMAT_CSV */
PWB_API pwb_status pwb_audit_report_render(const pwb_audit_report* report, pwb_format format, char** out);
PWB_API void pwb_audit_report_destroy(pwb_audit_report* report);

/*
 * JSON request/response endpoint shared with the HTTP service. `out`
 * receives the response rendered as JSON, a text block (post_hoc, a_priori)
 * or CSV (curve); error responses render as their JSON body or a one-line
 * message. `http_status` (optional) receives 200, 400, 422 or 500.
 */
PWB_API pwb_status pwb_analyze(const char* request_json, size_t length, pwb_format format, char** out,
                               int* http_status);

/* HTTP service */
typedef struct pwb_server pwb_server;

PWB_API int pwb_default_port(void);
/* Binds host:port (0 = ephemeral). */
PWB_API pwb_status pwb_server_create(const char* host, int port, pwb_server** out);
PWB_API int pwb_server_port(const pwb_server* server);
/* Blocks until pwb_server_stop(). */
PWB_API pwb_status pwb_server_run(pwb_server* server);
/* Thread-safe. A stop issued before run makes run return at once. */
PWB_API void pwb_server_stop(pwb_server* server);
PWB_API void pwb_server_destroy(pwb_server* server);

#ifdef __cplusplus
}
#endif

#endif /* POWERWB_H */
