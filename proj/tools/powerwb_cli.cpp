// powerwb command-line front end. Talks to the engine exclusively through the
// C API in powerwb/powerwb.h.

#include <signal.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "powerwb/powerwb.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by posthoc / apriori / curve. Unset numeric options stay empty
// so that the request only carries what the user gave.
struct AnalysisOptions {
    std::string family;
    double alpha = 0.05;
    std::string tails = "two";
    double power = 0.8;
    double drop_rate = 0.10;
    bool json_output = false;

    std::map<std::string, double> numbers;
    std::map<std::string, int> integers;
    std::vector<std::string> groups;
};

const std::map<std::string, std::set<std::string>> kFamilyFlags = {
    {"independent_t", {"m1", "sd1", "se1", "n1", "m2", "sd2", "se2", "n2", "d"}},
    {"paired_t", {"mean-diff", "sd-diff", "n", "dz"}},
    {"oneway_anova", {"group", "sd-within", "f", "k", "n-total"}},
    {"rm_within", {"ss-effect", "ss-error", "f2", "k", "m", "n-total", "epsilon"}},
};

const std::vector<std::string> kNumberFlags = {"m1", "sd1", "se1", "m2", "sd2", "se2", "d",  "mean-diff", "sd-diff",
                                               "dz", "sd-within", "f", "ss-effect", "ss-error", "f2", "epsilon"};
const std::vector<std::string> kIntegerFlags = {"n1", "n2", "n", "k", "m", "n-total"};

std::string normalize_family(std::string f) {
    for (auto& c : f)
        if (c == '-') c = '_';
    return f;
}

void add_analysis_options(CLI::App* cmd, AnalysisOptions& o, bool a_priori, bool curve) {
    static const std::vector<std::string> families = {"independent-t", "paired-t", "oneway-anova", "rm-within",
                                                      "independent_t", "paired_t", "oneway_anova", "rm_within"};
    cmd->add_option("family", o.family, "Test family")->required()->check(CLI::IsMember(families));
    cmd->add_option("--alpha", o.alpha, "Type I error rate")->capture_default_str();
    cmd->add_option("--tails", o.tails, "one or two (t families)")
        ->check(CLI::IsMember({"one", "two"}))
        ->capture_default_str();
    if (a_priori) {
        cmd->add_option("--power", o.power, "Target power")->capture_default_str();
        cmd->add_option("--drop-rate", o.drop_rate, "Anticipated attrition fraction")->capture_default_str();
    }
    if (curve) {
        cmd->add_option("--n-min", o.integers["n-min"], "Smallest N on the curve")->required();
        cmd->add_option("--n-max", o.integers["n-max"], "Largest N on the curve")->required();
    }
    cmd->add_flag("--json", o.json_output, "Print the raw JSON response");

    const std::map<std::string, std::string> help = {
        {"m1", "Group 1 mean"},          {"sd1", "Group 1 SD"},           {"se1", "Group 1 SE (converted to SD)"},
        {"m2", "Group 2 mean"},          {"sd2", "Group 2 SD"},           {"se2", "Group 2 SE (converted to SD)"},
        {"d", "Cohen's d"},              {"mean-diff", "Mean of paired differences"},
        {"sd-diff", "SD of paired differences"},                          {"dz", "Cohen's dz"},
        {"sd-within", "Within-group SD (overrides the pooled estimate)"}, {"f", "Cohen's f"},
        {"ss-effect", "Effect sum of squares"}, {"ss-error", "Error sum of squares"},
        {"f2", "Cohen's f squared"},     {"epsilon", "Nonsphericity correction"},
        {"n1", "Group 1 size"},          {"n2", "Group 2 size"},          {"n", "Number of pairs"},
        {"k", "Number of groups"},       {"m", "Number of measurements"}, {"n-total", "Total sample size"},
    };
    for (const auto& name : kNumberFlags) cmd->add_option("--" + name, o.numbers[name], help.at(name));
    for (const auto& name : kIntegerFlags) cmd->add_option("--" + name, o.integers[name], help.at(name));
    cmd->add_option("--group", o.groups, "Group summary mean,sd,n (repeat per group)");
}

bool given(const CLI::App* cmd, const std::string& name) { return cmd->count("--" + name) > 0; }

json group_json(double mean, std::optional<double> sd, std::optional<double> se, std::optional<int> n) {
    json g = {{"mean", mean}};
    if (sd) g["sd"] = *sd;
    if (se) g["se"] = *se;
    if (n) g["n"] = *n;
    return g;
}

json build_request(const CLI::App* cmd, const AnalysisOptions& o, const std::string& analysis) {
    const std::string family = normalize_family(o.family);
    const auto& allowed = kFamilyFlags.at(family);
    for (const auto& [name, flags] : kFamilyFlags)
        for (const auto& flag : flags)
            if (given(cmd, flag) && !allowed.count(flag))
                throw UsageError("--" + flag + " does not apply to family " + o.family);

    auto num = [&](const std::string& n) -> std::optional<double> {
        if (!given(cmd, n)) return std::nullopt;
        return o.numbers.at(n);
    };
    auto integer = [&](const std::string& n) -> std::optional<int> {
        if (!given(cmd, n)) return std::nullopt;
        return o.integers.at(n);
    };

    json req = {{"analysis", analysis}, {"family", family}, {"alpha", o.alpha}};
    if (family == "independent_t" || family == "paired_t") req["tails"] = o.tails;
    if (analysis == "a_priori") {
        req["target_power"] = o.power;
        req["drop_rate"] = o.drop_rate;
    }
    if (analysis == "curve") req["curve"] = {{"n_min", o.integers.at("n-min")}, {"n_max", o.integers.at("n-max")}};

    json design = json::object();
    auto put = [&](json& j, const char* key, const auto& value) {
        if (value) j[key] = *value;
    };

    if (family == "independent_t") {
        if (num("d")) {
            req["effect_size"] = {{"kind", "d"}, {"value", *num("d")}};
            put(design, "n1", integer("n1"));
            put(design, "n2", integer("n2"));
        } else {
            if (!num("m1") || !num("m2")) throw UsageError("give --d or both --m1 and --m2");
            req["summaries"] = {{"group1", group_json(*num("m1"), num("sd1"), num("se1"), integer("n1"))},
                                {"group2", group_json(*num("m2"), num("sd2"), num("se2"), integer("n2"))}};
        }
    } else if (family == "paired_t") {
        if (num("dz")) {
            req["effect_size"] = {{"kind", "dz"}, {"value", *num("dz")}};
            put(design, "n", integer("n"));
        } else {
            json s = json::object();
            put(s, "mean_diff", num("mean-diff"));
            put(s, "sd_diff", num("sd-diff"));
            put(s, "n", integer("n"));
            req["summaries"] = s;
        }
    } else if (family == "oneway_anova") {
        if (num("f")) {
            req["effect_size"] = {{"kind", "f"}, {"value", *num("f")}};
        } else {
            json groups = json::array();
            for (const auto& spec : o.groups) {
                std::vector<std::string> parts;
                std::stringstream ss(spec);
                for (std::string part; std::getline(ss, part, ',');) parts.push_back(part);
                if (parts.size() != 3) throw UsageError("--group expects mean,sd,n; got '" + spec + "'");
                try {
                    std::size_t used = 0;
                    const int n = std::stoi(parts[2], &used);
                    if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
                    groups.push_back({{"mean", std::stod(parts[0])}, {"sd", std::stod(parts[1])}, {"n", n}});
                } catch (const std::logic_error&) {
                    throw UsageError("--group expects numbers mean,sd,n; got '" + spec + "'");
                }
            }
            json s = {{"groups", groups}};
            put(s, "sd_within", num("sd-within"));
            req["summaries"] = s;
        }
        put(design, "k", integer("k"));
        put(design, "n_total", integer("n-total"));
    } else {
        if (num("f2")) {
            req["effect_size"] = {{"kind", "f_squared"}, {"value", *num("f2")}};
        } else {
            json s = json::object();
            put(s, "ss_effect", num("ss-effect"));
            put(s, "ss_error", num("ss-error"));
            req["summaries"] = s;
        }
        put(design, "k", integer("k"));
        put(design, "m", integer("m"));
        put(design, "n_total", integer("n-total"));
        design["epsilon"] = num("epsilon").value_or(1.0);
    }
    if (!design.empty()) req["design"] = design;
    return req;
}

int run_analysis(const CLI::App* cmd, const AnalysisOptions& o, const std::string& analysis) {
    json req;
    try {
        req = build_request(cmd, o, analysis);
    } catch (const UsageError& e) {
        std::cerr << "powerwb: " << e.what() << '\n';
        return kExitUsage;
    }
    const std::string body = req.dump();
    const pwb_format format = o.json_output ? PWB_FORMAT_JSON : PWB_FORMAT_TEXT;
    char* out = nullptr;
    int http = 0;
    const pwb_status status = pwb_analyze(body.data(), body.size(), format, &out, &http);
    if (status == PWB_OK) {
        std::cout << out;
        if (o.json_output) std::cout << '\n';
        pwb_string_free(out);
        return kExitOk;
    }
    if (o.json_output && out) std::cout << out << '\n';
    std::cerr << "powerwb: " << pwb_last_error() << '\n';
    pwb_string_free(out);
    return http == 400 ? kExitUsage : kExitFailure;
}

struct AuditOptions {
    std::string family;
    std::string path;
    double alpha = 0.05;
    std::string tails = "two";
    double power = 0.8;
    double drop_rate = 0.10;
    std::string format = "text";
};

int run_audit(const AuditOptions& o) {
    std::ifstream in(o.path, std::ios::binary);
    if (!in) {
        std::cerr << "powerwb: cannot read '" << o.path << "'\n";
        return kExitFailure;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    static const std::map<std::string, pwb_family> families = {{"independent_t", PWB_FAMILY_INDEPENDENT_T},
                                                               {"paired_t", PWB_FAMILY_PAIRED_T},
                                                               {"oneway_anova", PWB_FAMILY_ONEWAY_ANOVA},
                                                               {"rm_within", PWB_FAMILY_RM_WITHIN}};
    pwb_audit_config config;
    pwb_audit_config_init(&config);
    config.alpha = o.alpha;
    config.tails = o.tails == "one" ? PWB_TAILS_ONE : PWB_TAILS_TWO;
    config.target_power = o.power;
    config.drop_rate = o.drop_rate;

    pwb_audit_report* report = nullptr;
    if (pwb_audit_csv(content.data(), content.size(), families.at(normalize_family(o.family)), &config, &report) !=
        PWB_OK) {
        std::cerr << "powerwb: " << o.path << ": " << pwb_last_error() << '\n';
        return kExitFailure;
    }
    char* out = nullptr;
    const pwb_status s = pwb_audit_report_render(report, o.format == "csv" ? PWB_FORMAT_CSV : PWB_FORMAT_TEXT, &out);
    pwb_audit_report_destroy(report);
    if (s != PWB_OK) {
        std::cerr << "powerwb: " << pwb_last_error() << '\n';
        return kExitFailure;
    }
    std::cout << out;
    pwb_string_free(out);
    return kExitOk;
}

// SIGINT / SIGTERM are blocked in every thread and collected by a watcher
// thread with sigwait, so the server is stopped outside signal context.
int run_serve(const std::string& host, int port) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    pwb_server* server = nullptr;
    if (pwb_server_create(host.c_str(), port, &server) != PWB_OK) {
        std::cerr << "powerwb: " << pwb_last_error() << '\n';
        return kExitFailure;
    }
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        pwb_server_stop(server);
    });
    std::cerr << "powerwb: listening on http://" << host << ':' << pwb_server_port(server) << '\n';
    const pwb_status s = pwb_server_run(server);
    if (s != PWB_OK) std::cerr << "powerwb: " << pwb_last_error() << '\n';
    kill(getpid(), SIGTERM);  // release the watcher if no signal arrived
    watcher.join();
    pwb_server_destroy(server);
    return s == PWB_OK ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical power and sample size workbench"};
    app.set_version_flag("--version", pwb_version());
    app.require_subcommand(1);

    AnalysisOptions posthoc_opts, apriori_opts, curve_opts;
    auto* posthoc = app.add_subcommand("posthoc", "Power at a given sample size");
    add_analysis_options(posthoc, posthoc_opts, false, false);
    auto* apriori = app.add_subcommand("apriori", "Minimum sample size for a target power");
    add_analysis_options(apriori, apriori_opts, true, false);
    auto* curve = app.add_subcommand("curve", "p-value and power against N (paired-t), as CSV");
    add_analysis_options(curve, curve_opts, false, true);

    AuditOptions audit_opts;
    auto* audit = app.add_subcommand("audit", "Regenerate Power / Min N / Final N for a CSV of published rows");
    audit->add_option("family", audit_opts.family, "Test family")
        ->required()
        ->check(CLI::IsMember({"independent-t", "paired-t", "oneway-anova", "rm-within", "independent_t", "paired_t",
                               "oneway_anova", "rm_within"}));
    audit->add_option("csv", audit_opts.path, "CSV file")->required();
    audit->add_option("--alpha", audit_opts.alpha, "Type I error rate")->capture_default_str();
    audit->add_option("--tails", audit_opts.tails, "one or two")->check(CLI::IsMember({"one", "two"}))->capture_default_str();
    audit->add_option("--power", audit_opts.power, "Target power")->capture_default_str();
    audit->add_option("--drop-rate", audit_opts.drop_rate, "Anticipated attrition fraction")->capture_default_str();
    audit->add_option("--format", audit_opts.format, "text or csv")->check(CLI::IsMember({"text", "csv"}))->capture_default_str();

    std::string host = "127.0.0.1";
    int port = pwb_default_port();
    auto* serve = app.add_subcommand("serve", "Serve POST /api/analyze and GET /api/health");
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port (default $POWERWB_PORT or 8080)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*posthoc) return run_analysis(posthoc, posthoc_opts, "post_hoc");
    if (*apriori) return run_analysis(apriori, apriori_opts, "a_priori");
    if (*curve) {
        if (normalize_family(curve_opts.family) != "paired_t") {
            std::cerr << "powerwb: curve is only available for paired-t\n";
            return kExitUsage;
        }
        return run_analysis(curve, curve_opts, "curve");
    }
    if (*audit) return run_audit(audit_opts);
    if (*serve) return run_serve(host, port);
    return kExitUsage;
}
