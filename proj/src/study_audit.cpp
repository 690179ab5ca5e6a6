#include "powerwb/study_audit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "format.hpp"
#include "powerwb/errors.hpp"

namespace powerwb {

namespace {

using detail::CsvRecord;
using detail::fixed;

// Column name -> zero-based index, built from the header row.
class Header {
public:
    Header(const CsvRecord& record) : line_(record.line) {
        for (std::size_t i = 0; i < record.fields.size(); ++i) {
            const auto& name = record.fields[i];
            if (name.empty()) throw ParseError("empty header name", line_, i + 1);
            if (!index_.emplace(name, i).second)
                throw ParseError("duplicate header '" + name + "'", line_, i + 1);
        }
        width_ = record.fields.size();
    }

    std::optional<std::size_t> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t require(const std::string& name) const {
        auto i = find(name);
        if (!i) throw ParseError("missing required column '" + name + "'", line_, 0);
        return *i;
    }

    // Every column must have been claimed by the schema.
    void reject_unknown(const std::vector<std::size_t>& claimed, const CsvRecord& record) const {
        for (std::size_t i = 0; i < width_; ++i)
            if (std::find(claimed.begin(), claimed.end(), i) == claimed.end())
                throw ParseError("unknown header '" + record.fields[i] + "'", line_, i + 1);
    }

    std::size_t width() const { return width_; }
    std::size_t line() const { return line_; }

private:
    std::map<std::string, std::size_t> index_;
    std::size_t width_ = 0;
    std::size_t line_;
};

class RowReader {
public:
    RowReader(const CsvRecord& record) : record_(record) {}

    const std::string& text(std::size_t column) const { return record_.fields[column]; }

    bool empty(std::size_t column) const { return record_.fields[column].empty(); }

    double number(std::size_t column) const {
        const auto& cell = record_.fields[column];
        double value = 0.0;
        const char* first = cell.data();
        const char* last = cell.data() + cell.size();
        if (!cell.empty() && *first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value))
            fail("non-numeric cell '" + cell + "'", column);
        return value;
    }

    int integer(std::size_t column) const {
        const auto& cell = record_.fields[column];
        int value = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
            fail("expected an integer, got '" + cell + "'", column);
        return value;
    }

    double positive(std::size_t column, const char* what) const {
        const double v = number(column);
        if (!(v > 0.0)) fail(std::string(what) + " must be positive", column);
        return v;
    }

    int at_least(std::size_t column, int minimum, const char* what) const {
        const int v = integer(column);
        if (v < minimum) fail(std::string(what) + " must be at least " + std::to_string(minimum), column);
        return v;
    }

    [[noreturn]] void fail(const std::string& message, std::size_t column) const {
        throw ParseError(message, record_.line, column + 1);
    }


private:
    const CsvRecord& record_;
};

// A group is (mean_i, sd_i | se_i, n_i); se columns are converted to sd.
struct GroupColumns {
    std::size_t mean;
    std::size_t spread;
    bool spread_is_se;
    std::size_t n;
};

std::optional<GroupColumns> find_group(const Header& h, int index) {
    const std::string i = std::to_string(index);
    auto mean = h.find("mean" + i);
    if (!mean) return std::nullopt;
    auto sd = h.find("sd" + i);
    auto se = h.find("se" + i);
    if (sd && se) throw ParseError("both sd" + i + " and se" + i + " present", h.line(), *se + 1);
    if (!sd && !se) h.require("sd" + i);
    return GroupColumns{*mean, sd ? *sd : *se, !sd.has_value(), h.require("n" + i)};
}

GroupSummary read_group(const RowReader& r, const GroupColumns& c) {
    GroupSummary g;
    g.mean = r.number(c.mean);
    g.n = r.at_least(c.n, 2, "group n");
    const double spread = r.positive(c.spread, c.spread_is_se ? "se" : "sd");
    g.sd = c.spread_is_se ? sd_from_se(spread, g.n) : spread;
    return g;
}

}  // namespace

std::string_view to_string(RowStatus status) {
    switch (status) {
        case RowStatus::ok: return "ok";
        case RowStatus::unreachable: return "unreachable";
        case RowStatus::not_reproducible: return "not_reproducible";
        case RowStatus::error: return "error";
    }
    return "error";
}

std::vector<StudyRow> parse_study_csv(std::string_view content, Family family) {
    const auto records = detail::read_csv(content);
    std::vector<StudyRow> rows;
    if (records.empty()) throw ParseError("missing header row", 1, 0);

    const CsvRecord& head = records.front();
    const Header header(head);
    std::vector<std::size_t> claimed;
    auto claim = [&](std::size_t i) {
        claimed.push_back(i);
        return i;
    };

    const std::size_t label_col = claim(header.require("label"));
    const auto reported_col = header.find("reported_p");
    if (reported_col) claim(*reported_col);

    std::vector<GroupColumns> groups;
    std::size_t mean_diff = 0, sd_diff = 0, n_col = 0;
    std::size_t ss_effect = 0, ss_error = 0, k_col = 0, m_col = 0, n_total = 0, eps_col = 0;
    std::optional<std::size_t> sd_within;

    auto claim_group = [&](const GroupColumns& g) {
        claim(g.mean);
        claim(g.spread);
        claim(g.n);
        groups.push_back(g);
    };

    switch (family) {
        case Family::independent_t:
            for (int i = 1; i <= 2; ++i) {
                auto g = find_group(header, i);
                if (!g) header.require("mean" + std::to_string(i));
                claim_group(*g);
            }
            break;
        case Family::paired_t:
            mean_diff = claim(header.require("mean_diff"));
            sd_diff = claim(header.require("sd_diff"));
            n_col = claim(header.require("n"));
            break;
        case Family::oneway_anova:
            for (int i = 1;; ++i) {
                auto g = find_group(header, i);
                if (!g) break;
                claim_group(*g);
            }
            if (groups.size() < 2) throw ParseError("one-way ANOVA needs at least 2 group triplets", head.line, 0);
            sd_within = header.find("sd_within");
            if (sd_within) claim(*sd_within);
            break;
        case Family::rm_within:
            ss_effect = claim(header.require("ss_effect"));
            ss_error = claim(header.require("ss_error"));
            k_col = claim(header.require("k"));
            m_col = claim(header.require("m"));
            n_total = claim(header.require("n_total"));
            eps_col = claim(header.require("epsilon"));
            break;
    }
    header.reject_unknown(claimed, head);

    for (std::size_t i = 1; i < records.size(); ++i) {
        const CsvRecord& rec = records[i];
        if (rec.fields.size() != header.width())
            throw ParseError("expected " + std::to_string(header.width()) + " fields, found " +
                                 std::to_string(rec.fields.size()),
                             rec.line, 0);
        const RowReader r(rec);
        StudyRow row;
        row.line = rec.line;
        row.label = r.text(label_col);
        if (reported_col && !r.empty(*reported_col)) row.reported_p = r.text(*reported_col);

        switch (family) {
            case Family::independent_t:
                row.payload = IndependentTRow{read_group(r, groups[0]), read_group(r, groups[1])};
                break;
            case Family::paired_t: {
                PairedDiffSummary p;
                p.mean_diff = r.number(mean_diff);
                p.sd_diff = r.positive(sd_diff, "sd_diff");
                p.n = r.at_least(n_col, 2, "n");
                row.payload = p;
                break;
            }
            case Family::oneway_anova: {
                OneWayAnovaRow a;
                for (const auto& g : groups) a.groups.push_back(read_group(r, g));
                if (sd_within && !r.empty(*sd_within)) a.sd_within = r.positive(*sd_within, "sd_within");
                row.payload = std::move(a);
                break;
            }
            case Family::rm_within: {
                RmWithinRow rm;
                const bool has_effect = !r.empty(ss_effect);
                const bool has_error = !r.empty(ss_error);
                if (has_effect != has_error)
                    r.fail("ss_effect and ss_error must both be present or both empty",
                           has_effect ? ss_error : ss_effect);
                if (has_effect) {
                    VarianceComponents v;
                    v.ss_effect = r.number(ss_effect);
                    if (v.ss_effect < 0.0) r.fail("ss_effect must be nonnegative", ss_effect);
                    v.ss_error = r.positive(ss_error, "ss_error");
                    rm.components = v;
                }
                rm.k = r.at_least(k_col, 1, "k");
                rm.m = r.at_least(m_col, 2, "m");
                rm.n_total = r.integer(n_total);
                if (rm.n_total <= rm.k) r.fail("n_total must exceed k", n_total);
                rm.epsilon = r.number(eps_col);
                if (!(rm.epsilon >= 1.0 / (rm.m - 1.0) - 1e-12 && rm.epsilon <= 1.0))
                    r.fail("epsilon must lie in [1/(m-1), 1]", eps_col);
                row.payload = rm;
                break;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

AuditRow audit_row(const StudyRow& row, const AuditConfig& config) {
    AuditRow out;
    out.label = row.label;
    out.family = row.family();
    out.reported_p = row.reported_p;

    std::optional<DesignSpec> spec;
    try {
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, IndependentTRow>) {
                    auto d = cohen_d(p.group1, p.group2);
                    spec = DesignSpec{IndependentTDesign{d, p.group1.n, p.group2.n}, config.alpha, config.tails};
                } else if constexpr (std::is_same_v<T, PairedDiffSummary>) {
                    spec = DesignSpec{PairedTDesign{cohen_dz(p), p.n}, config.alpha, config.tails};
                } else if constexpr (std::is_same_v<T, OneWayAnovaRow>) {
                    const double sd = p.sd_within ? *p.sd_within : pooled_sd(p.groups);
                    auto f = cohen_f_from_means(p.groups, sd);
                    if (!p.sd_within) f.derivation += " (pooled estimate)";
                    int total = 0;
                    for (const auto& g : p.groups) total += g.n;
                    spec = DesignSpec{OneWayAnovaDesign{f, static_cast<int>(p.groups.size()), total},
                                      config.alpha, config.tails};
                } else {
                    if (!p.components) return;
                    spec = DesignSpec{RmWithinDesign{f_squared_from_variances(*p.components), p.k, p.m,
                                                     p.n_total, p.epsilon},
                                      config.alpha, config.tails};
                }
            },
            row.payload);
    } catch (const DomainError& e) {
        out.status = RowStatus::error;
        out.note = e.what();
        return out;
    }

    if (!spec) {
        out.status = RowStatus::not_reproducible;
        out.note = "not reproducible: missing variance components";
        return out;
    }

    out.effect = spec->effect();
    for (const auto& w : out.effect->warnings) out.note += (out.note.empty() ? "" : "; ") + w;
    try {
        out.power = compute_power(*spec);
        try {
            out.sample_size = solve_min_n(*spec, config.target_power, config.drop_rate);
            out.granularity = out.sample_size->granularity;
        } catch (const UnreachableTarget& e) {
            out.status = RowStatus::unreachable;
            out.note += (out.note.empty() ? "unreachable: " : "; unreachable: ") + std::string(e.what());
        }
    } catch (const DomainError& e) {
        out.status = RowStatus::error;
        out.note += (out.note.empty() ? "" : "; ") + std::string(e.what());
    }
    if (!out.sample_size) {
        out.granularity = out.family == Family::independent_t ? Granularity::per_group
                          : out.family == Family::paired_t    ? Granularity::pairs
                                                              : Granularity::total;
    }
    return out;
}

AuditReport audit(std::span<const StudyRow> rows, const AuditConfig& config) {
    if (rows.empty()) throw DomainError("audit needs at least one row");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(config.target_power > config.alpha && config.target_power < 1.0))
        throw DomainError("target power must lie in (alpha, 1)");
    if (!(config.drop_rate >= 0.0 && config.drop_rate < 1.0)) throw DomainError("drop rate must lie in [0, 1)");
    AuditReport report;
    report.config = config;
    report.rows.reserve(rows.size());
    for (const auto& row : rows) report.rows.push_back(audit_row(row, config));
    return report;
}

namespace {

std::string effect_cell(const AuditRow& row) {
    if (!row.effect) return "-";
    return std::string(to_string(row.effect->kind)) + "=" + fixed(row.effect->value, 4);
}

std::string config_line(const AuditConfig& c) {
    return "alpha=" + detail::compact(c.alpha) + " tails=" + std::string(to_string(c.tails)) +
           " target_power=" + detail::compact(c.target_power) + " drop_rate=" + detail::compact(c.drop_rate);
}

}  // namespace

std::string render_text(const AuditReport& report) {
    struct Cells {
        std::string label, effect, power, min_n, final_n, unit, reported, note;
    };
    std::vector<Cells> table;
    table.push_back({"label", "effect", "power", "min N", "final N", "unit", "reported p", "note"});
    for (const auto& row : report.rows) {
        Cells c;
        c.label = row.label;
        c.effect = effect_cell(row);
        c.power = row.power ? fixed(row.power->power, 4) : "-";
        c.min_n = row.sample_size ? std::to_string(row.sample_size->min_n) : "-";
        c.final_n = row.sample_size ? std::to_string(row.sample_size->final_n) : "-";
        c.unit = std::string(to_string(row.granularity));
        c.reported = row.reported_p.value_or("");
        c.note = row.note;
        table.push_back(std::move(c));
    }
    std::size_t w[7] = {};
    for (const auto& c : table) {
        const std::string* cols[7] = {&c.label, &c.effect, &c.power, &c.min_n, &c.final_n, &c.unit, &c.reported};
        for (int i = 0; i < 7; ++i) w[i] = std::max(w[i], cols[i]->size());
    }
    std::string out = config_line(report.config) + '\n';
    for (const auto& c : table) {
        std::string line;
        auto left = [&](const std::string& s, std::size_t width) { line += s + std::string(width - s.size(), ' ') + "  "; };
        auto right = [&](const std::string& s, std::size_t width) { line += std::string(width - s.size(), ' ') + s + "  "; };
        left(c.label, w[0]);
        left(c.effect, w[1]);
        right(c.power, w[2]);
        right(c.min_n, w[3]);
        right(c.final_n, w[4]);
        left(c.unit, w[5]);
        left(c.reported, w[6]);
        line += c.note;
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    }
    return out;
}

std::string render_csv(const AuditReport& report) {
    using detail::csv_escape;
    std::ostringstream os;
    os << "# " << config_line(report.config) << '\n';
    os << "label,effect_kind,effect_size,power,min_n,final_n,granularity,status,reported_p,note\n";
    for (const auto& row : report.rows) {
        os << csv_escape(row.label) << ',';
        os << (row.effect ? std::string(to_string(row.effect->kind)) : "") << ',';
        os << (row.effect ? fixed(row.effect->value, 4) : "") << ',';
        os << (row.power ? fixed(row.power->power, 4) : "") << ',';
        os << (row.sample_size ? std::to_string(row.sample_size->min_n) : "") << ',';
        os << (row.sample_size ? std::to_string(row.sample_size->final_n) : "") << ',';
        os << to_string(row.granularity) << ',';
        os << to_string(row.status) << ',';
        os << csv_escape(row.reported_p.value_or("")) << ',';
        os << csv_escape(row.note) << '\n';
    }
    return os.str();
}

}  // namespace powerwb
