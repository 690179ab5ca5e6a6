#pragma once

// JSON request/response layer shared by the CLI and the HTTP service.
//
// Request (lower_snake_case):
//   analysis      "post_hoc" | "a_priori" | "curve"
//   family        "independent_t" | "paired_t" | "oneway_anova" | "rm_within"
//   alpha         number in (0, 1)
//   tails         "one" | "two"            t families, default "two"
//   target_power  number                   a_priori
//   drop_rate     number in [0, 1)         a_priori
//   curve         {"n_min", "n_max"}       curve (paired_t summaries only)
//   exactly one of
//     summaries   family-specific raw statistics
//     effect_size {"kind", "value"}
//   design        sample sizes / k / m / epsilon not implied by the summaries
//
// Responses always carry "engine_version". Status 400 marks a malformed
// request, 422 a request whose values are outside the engine's domain.

#include <string>
#include <string_view>

#include "json.hpp"

namespace powerwb {

std::string engine_version();

struct AnalyzeOutcome {
    int http_status = 200;
    nlohmann::json body;
};

AnalyzeOutcome analyze(const nlohmann::json& request);

// Parses `body` first; unparseable JSON is a 400.
AnalyzeOutcome analyze_body(std::string_view body);

// Human-readable block for a successful post_hoc / a_priori response, or a
// one-line message for an error response.
std::string render_response_text(const nlohmann::json& response);

// CSV of a curve response: n,t_stat,p_value,power.
std::string render_curve_csv(const nlohmann::json& response);

}  // namespace powerwb
