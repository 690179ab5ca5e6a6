#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "powerwb/errors.hpp"
#include "powerwb/study_audit.hpp"

using namespace powerwb;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(POWERWB_DATA_DIR) + "/" + name, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ParseError parse_error(std::string_view csv, Family family) {
    try {
        parse_study_csv(csv, family);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a parse error");
    return ParseError("", 0, 0);
}

}  // namespace

TEST_SUITE("study_audit parsing") {
    TEST_CASE("se columns are converted to sd on load") {
        const auto rows = parse_study_csv(slurp("table1_independent_t_se.csv"), Family::independent_t);
        REQUIRE(rows.size() == 6);
        const auto& r = std::get<IndependentTRow>(rows[0].payload);
        CHECK(r.group1.sd == doctest::Approx(0.1414).epsilon(1e-3));
        CHECK(r.group2.sd == doctest::Approx(0.1980).epsilon(1e-3));
        CHECK(std::get<IndependentTRow>(rows[4].payload).group2.sd == doctest::Approx(0.5940).epsilon(1e-3));
        CHECK(rows[0].label == "Without splint / Relaxing");
        CHECK(rows[0].reported_p == "ns");
    }

    TEST_CASE("empty data section gives no rows") {
        CHECK(parse_study_csv("label,mean_diff,sd_diff,n\n", Family::paired_t).empty());
        CHECK(parse_study_csv("# nothing\nlabel,mean_diff,sd_diff,n\n\n", Family::paired_t).empty());
    }

    TEST_CASE("column order is free and quoted labels keep commas") {
        const auto rows = parse_study_csv("n,sd_diff,label,mean_diff\r\n27,0.64,\"Area, mm\",-0.29\r\n",
                                          Family::paired_t);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].label == "Area, mm");
        const auto& p = std::get<PairedDiffSummary>(rows[0].payload);
        CHECK(p.mean_diff == -0.29);
        CHECK(p.n == 27);
        CHECK(rows[0].line == 2);
    }

    TEST_CASE("sd <= 0 is rejected at its line and column") {
        const auto e = parse_error("label,mean_diff,sd_diff,n\nA,1,2,10\nB,1,0,10\n", Family::paired_t);
        CHECK(e.line() == 3);
        CHECK(e.column() == 3);
    }

    TEST_CASE("non-numeric cell") {
        const auto e = parse_error("label,mean1,sd1,n1,mean2,sd2,n2\nA,1,x,8,2,1,8\n", Family::independent_t);
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
        const auto frac = parse_error("label,mean_diff,sd_diff,n\nA,1,2,10.5\n", Family::paired_t);
        CHECK(frac.column() == 4);
    }

    TEST_CASE("header errors") {
        CHECK(parse_error("label,mean_diff,sd_diff,n,bogus\n", Family::paired_t).line() == 1);
        CHECK(parse_error("label,mean_diff,n\n", Family::paired_t).line() == 1);
        CHECK(parse_error("label,mean_diff,mean_diff,sd_diff,n\n", Family::paired_t).line() == 1);
        CHECK(parse_error("label,mean1,sd1,se1,n1,mean2,sd2,n2\n", Family::independent_t).line() == 1);
        CHECK(parse_error("label,mean1,sd1,n1\n", Family::oneway_anova).line() == 1);
        CHECK(parse_error("label,mean1,sd1,n1,mean3,sd3,n3\n", Family::oneway_anova).line() == 1);
        CHECK(parse_error("", Family::paired_t).line() == 1);
    }

    TEST_CASE("ragged row") {
        const auto e = parse_error("label,mean_diff,sd_diff,n\nA,1,2\n", Family::paired_t);
        CHECK(e.line() == 2);
    }

    TEST_CASE("rm rows with half the variance components are rejected") {
        const auto e = parse_error("label,ss_effect,ss_error,k,m,n_total,epsilon\nA,1.0,,3,26,78,1\n", Family::rm_within);
        CHECK(e.line() == 2);
    }

    TEST_CASE("rm rows without components parse as unreproducible") {
        const auto rows = parse_study_csv(slurp("table5_rm_within.csv"), Family::rm_within);
        REQUIRE(rows.size() == 5);
        CHECK_FALSE(std::get<RmWithinRow>(rows[0].payload).components.has_value());
        CHECK(std::get<RmWithinRow>(rows[3].payload).components->ss_effect == 2.331);
    }
}

TEST_SUITE("study_audit") {
    TEST_CASE("paired table") {
        const auto rows = parse_study_csv(slurp("table2_paired_t.csv"), Family::paired_t);
        const auto report = audit(rows, AuditConfig{});
        const double power[] = {0.6206, 0.9094, 0.9517, 0.3009};
        const std::int64_t min_n[] = {41, 21, 12, 98};
        const std::int64_t final_n[] = {46, 24, 14, 109};
        REQUIRE(report.rows.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& r = report.rows[i];
            CHECK(r.status == RowStatus::ok);
            CHECK(std::fabs(r.power->power - power[i]) < 1e-3);
            CHECK(r.sample_size->min_n == min_n[i]);
            CHECK(r.sample_size->final_n == final_n[i]);
            CHECK(r.granularity == Granularity::pairs);
        }
        CHECK(report.rows[3].label == "L1%");
    }

    TEST_CASE("row audit equals the composition of engine operations") {
        const auto rows = parse_study_csv(slurp("table1_independent_t.csv"), Family::independent_t);
        const AuditConfig cfg;
        for (const auto& row : rows) {
            const auto a = audit_row(row, cfg);
            const auto& p = std::get<IndependentTRow>(row.payload);
            const auto d = cohen_d(p.group1, p.group2);
            const DesignSpec spec{IndependentTDesign{d, p.group1.n, p.group2.n}, cfg.alpha, cfg.tails};
            CHECK(a.effect->value == d.value);
            CHECK(a.power->power == compute_power(spec).power);
            const auto s = solve_min_n(spec, cfg.target_power, cfg.drop_rate);
            CHECK(a.sample_size->min_n == s.min_n);
            CHECK(a.sample_size->final_n == s.final_n);
        }
    }

    TEST_CASE("zero effect row is flagged unreachable with power alpha") {
        const auto rows = parse_study_csv("label,mean_diff,sd_diff,n\nnull,0,1,20\n", Family::paired_t);
        const auto report = audit(rows, AuditConfig{});
        CHECK(report.rows[0].status == RowStatus::unreachable);
        CHECK(report.rows[0].power->power == doctest::Approx(0.05).epsilon(1e-9));
        CHECK_FALSE(report.rows[0].sample_size.has_value());
    }

    TEST_CASE("missing variance components") {
        const auto rows = parse_study_csv(slurp("table5_rm_within.csv"), Family::rm_within);
        const auto report = audit(rows, AuditConfig{});
        for (std::size_t i : {0u, 1u, 2u, 4u}) {
            CHECK(report.rows[i].status == RowStatus::not_reproducible);
            CHECK(report.rows[i].note == "not reproducible: missing variance components");
        }
        CHECK(report.rows[3].status == RowStatus::ok);
        CHECK(report.rows[3].sample_size->min_n == 297);
    }

    TEST_CASE("empty input and bad config throw") {
        CHECK_THROWS_AS(audit({}, AuditConfig{}), DomainError);
        const auto rows = parse_study_csv(slurp("table2_paired_t.csv"), Family::paired_t);
        AuditConfig bad;
        bad.alpha = 1.5;
        CHECK_THROWS_AS(audit(rows, bad), DomainError);
        bad = AuditConfig{};
        bad.drop_rate = 1.0;
        CHECK_THROWS_AS(audit(rows, bad), DomainError);
    }

    TEST_CASE("reports are deterministic and final N follows the drop rate") {
        const auto rows = parse_study_csv(slurp("table4_oneway_anova.csv"), Family::oneway_anova);
        const auto a = audit(rows, AuditConfig{});
        const auto b = audit(rows, AuditConfig{});
        CHECK(render_text(a) == render_text(b));
        CHECK(render_csv(a) == render_csv(b));
        for (const auto& r : a.rows)
            CHECK(r.sample_size->final_n == apply_drop_rate(r.sample_size->min_n, 0.1));
    }

    TEST_CASE("csv rendering") {
        const auto rows = parse_study_csv(slurp("table2_paired_t.csv"), Family::paired_t);
        const auto csv = render_csv(audit(rows, AuditConfig{}));
        CHECK(csv.find("label,effect_kind,effect_size,power,min_n,final_n,granularity,status,reported_p,note\n") !=
              std::string::npos);
        CHECK(csv.find("Area,dz,0.4531,0.6206,41,46,pairs,ok,0.029,\n") != std::string::npos);
        const auto text = render_text(audit(rows, AuditConfig{}));
        CHECK(text.find("0.6206") != std::string::npos);
        CHECK(text.find(" \n") == std::string::npos);
    }
}
