#include "intervene/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace intervene {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string report_timestamp(bool fixed_clock) {
    if (fixed_clock) return kFixedClock;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json report_envelope(const std::string& command, const std::string& generated_at, Json config, Json result) {
    return Json{{"command", command},
                {"generated_at", generated_at},
                {"config", std::move(config)},
                {"result", std::move(result)}};
}

// ---------------------------------------------------------------------------
// JSON

Json to_json(const Metrics& m) {
    return Json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
                {"tn", m.tn}};
}

namespace {

Json cell_json(const StatCell& c) {
    return Json{{"threads", c.threads},
                {"posts", c.posts},
                {"intervened_threads", c.intervened_threads},
                {"intervened_posts", c.intervened_posts},
                {"ratio", c.ratio()}};
}

StatCell cell_from(const Json& j) {
    StatCell c;
    c.threads = j.at("threads").get<std::size_t>();
    c.posts = j.at("posts").get<std::size_t>();
    c.intervened_threads = j.at("intervened_threads").get<std::size_t>();
    c.intervened_posts = j.at("intervened_posts").get<std::size_t>();
    return c;
}

Json by_type_json(const std::array<StatCell, 4>& cells) {
    Json j = Json::object();
    for (std::size_t k = 0; k < kForumTypes.size(); ++k) j[std::string(to_string(kForumTypes[k]))] = cell_json(cells[k]);
    return j;
}

std::array<StatCell, 4> by_type_from(const Json& j) {
    std::array<StatCell, 4> cells{};
    for (std::size_t k = 0; k < kForumTypes.size(); ++k) cells[k] = cell_from(j.at(std::string(to_string(kForumTypes[k]))));
    return cells;
}

}  // namespace

Json to_json(const CorpusStats& stats) {
    Json courses = Json::array();
    for (const auto& c : stats.courses)
        courses.push_back({{"course_id", c.course_id}, {"by_type", by_type_json(c.by_type)}, {"total", cell_json(c.total)}});
    return Json{{"courses", courses}, {"by_type", by_type_json(stats.by_type)}, {"total", cell_json(stats.total)}};
}

CorpusStats stats_from_json(const Json& j) {
    CorpusStats stats;
    for (const auto& c : j.at("courses")) {
        CourseStats cs;
        cs.course_id = c.at("course_id").get<std::string>();
        cs.by_type = by_type_from(c.at("by_type"));
        cs.total = cell_from(c.at("total"));
        stats.courses.push_back(std::move(cs));
    }
    stats.by_type = by_type_from(j.at("by_type"));
    stats.total = cell_from(j.at("total"));
    return stats;
}

Json to_json(const CourseResult& r) {
    Json j{{"course_id", r.course_id},
           {"threads", r.threads},
           {"positives", r.positives},
           {"intervention_ratio", r.intervention_ratio},
           {"metrics", to_json(r.metrics)},
           {"baseline_f1_100r", to_json(r.baseline)},
           {"class_weight", r.class_weight}};
    if (!r.folds.empty()) {
        Json folds = Json::array();
        for (std::size_t i = 0; i < r.folds.size(); ++i) {
            Json f = to_json(r.folds[i]);
            if (i < r.fold_weights.size()) f["class_weight"] = r.fold_weights[i];
            folds.push_back(std::move(f));
        }
        j["folds"] = std::move(folds);
    }
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

Json to_json(const ExperimentReport& report) {
    Json courses = Json::array();
    for (const auto& c : report.courses) courses.push_back(to_json(c));
    return Json{{"kind", report.kind},
                {"features", report.features.to_string()},
                {"courses", courses},
                {"total_threads", report.total_threads},
                {"average",
                 {{"metrics", to_json(report.average)},
                  {"baseline_f1_100r", to_json(report.baseline_average)},
                  {"intervention_ratio", report.average_ratio},
                  {"class_weight", report.average_weight}}},
                {"weighted_macro",
                 {{"metrics", to_json(report.weighted_macro)},
                  {"baseline_f1_100r", to_json(report.baseline_weighted_macro)},
                  {"intervention_ratio", report.weighted_ratio},
                  {"class_weight", report.weighted_weight}}}};
}

Json to_json(std::span<const FeatureStudyRow> rows) {
    Json out = Json::array();
    for (const auto& r : rows)
        out.push_back({{"row", r.number}, {"label", r.label}, {"features", r.flags.to_string()}, {"report", to_json(r.report)}});
    return out;
}

Json to_json(const KappaResult& result) {
    Json pairs = Json::array();
    for (const auto& p : result.pairs) {
        Json j{{"first", p.first}, {"second", p.second}, {"observed", p.observed}, {"chance", p.chance}};
        j["kappa"] = p.kappa ? Json(*p.kappa) : Json(nullptr);
        pairs.push_back(std::move(j));
    }
    Json j{{"pairs", pairs}};
    j["average"] = result.average ? Json(*result.average) : Json(nullptr);
    j["warnings"] = result.warnings;
    return j;
}

Json to_json(const TuneResult& result) {
    Json grid = Json::array();
    for (const auto& [w, f1] : result.evaluated) grid.push_back({{"class_weight", w}, {"f1", f1}});
    return Json{{"best_class_weight", result.best_weight}, {"best_f1", result.best_f1}, {"evaluated", grid}};
}

// ---------------------------------------------------------------------------
// Text

TextTable::TextTable(std::vector<std::string> header, std::size_t left_columns)
    : header_(std::move(header)), left_(left_columns) {}

void TextTable::add(std::vector<std::string> row) {
    row.resize(header_.size());
    rows_.push_back(std::move(row));
}

void TextTable::rule() { rows_.emplace_back(); }

std::string TextTable::str() const {
    std::vector<std::size_t> width(header_.size());
    for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
    for (const auto& row : rows_)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    const std::string line(total > 2 ? total - 2 : 0, '-');

    auto emit = [&](std::ostringstream& os, const std::vector<std::string>& row) {
        std::string text;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const std::string pad(width[c] - row[c].size(), ' ');
            text += c < left_ ? row[c] + pad : pad + row[c];
            if (c + 1 < row.size()) text += "  ";
        }
        while (!text.empty() && text.back() == ' ') text.pop_back();
        os << text << '\n';
    };

    std::ostringstream os;
    emit(os, header_);
    os << line << '\n';
    for (const auto& row : rows_) {
        if (row.empty())
            os << line << '\n';
        else
            emit(os, row);
    }
    return os.str();
}

namespace {

std::string pct(double v) { return fixed(100.0 * v, 2); }

}  // namespace

std::string format_stats(const CorpusStats& stats) {
    std::vector<std::string> header{"Course"};
    for (auto t : kForumTypes) {
        const std::string name(to_string(t));
        header.push_back(name + " thr");
        header.push_back(name + " int");
    }
    for (const char* h : {"Threads", "Posts", "Int. threads", "Int. posts", "I.Ratio"}) header.emplace_back(h);

    TextTable table(header);
    auto row_for = [](const std::string& label, const std::array<StatCell, 4>& cells, const StatCell& total) {
        std::vector<std::string> row{label};
        for (const auto& c : cells) {
            row.push_back(std::to_string(c.threads));
            row.push_back(std::to_string(c.intervened_threads));
        }
        row.push_back(std::to_string(total.threads));
        row.push_back(std::to_string(total.posts));
        row.push_back(std::to_string(total.intervened_threads));
        row.push_back(std::to_string(total.intervened_posts));
        row.push_back(fixed(total.ratio(), 2));
        return row;
    };
    for (const auto& c : stats.courses) table.add(row_for(c.course_id, c.by_type, c.total));
    table.rule();
    table.add(row_for("Total", stats.by_type, stats.total));

    std::ostringstream os;
    os << table.str() << "\nIntervention ratio by forum type:";
    for (std::size_t k = 0; k < kForumTypes.size(); ++k)
        os << (k ? ", " : " ") << to_string(kForumTypes[k]) << ' ' << fixed(stats.by_type[k].ratio(), 2);
    os << '\n';
    return os.str();
}

std::string format_experiment(const ExperimentReport& report, bool baseline) {
    std::vector<std::string> header{"Course", "Threads", "I.Ratio", "P", "R", "F1", "W"};
    if (baseline) header.emplace_back("F1@100R");
    TextTable table(header);
    for (const auto& c : report.courses) {
        std::vector<std::string> row{c.course_id,          std::to_string(c.threads), fixed(c.intervention_ratio, 2),
                                     pct(c.metrics.precision), pct(c.metrics.recall),   pct(c.metrics.f1),
                                     fixed(c.class_weight, 2)};
        if (baseline) row.push_back(pct(c.baseline.f1));
        table.add(std::move(row));
    }
    table.rule();
    auto agg = [&](const std::string& label, const Metrics& m, const Metrics& b, double ratio, double w,
                   const std::string& threads) {
        std::vector<std::string> row{label, threads, fixed(ratio, 2), pct(m.precision), pct(m.recall), pct(m.f1),
                                     fixed(w, 2)};
        if (baseline) row.push_back(pct(b.f1));
        table.add(std::move(row));
    };
    agg("Average", report.average, report.baseline_average, report.average_ratio, report.average_weight,
        std::to_string(report.total_threads));
    agg("Weighted macro", report.weighted_macro, report.baseline_weighted_macro, report.weighted_ratio,
        report.weighted_weight, "");

    std::ostringstream os;
    os << report.kind << " (" << report.features.to_string() << ")\n" << table.str();
    for (const auto& c : report.courses)
        if (!c.note.empty()) os << "note: " << c.course_id << ": " << c.note << '\n';
    return os.str();
}

std::string format_feature_study(std::span<const FeatureStudyRow> rows) {
    TextTable table({"#", "Configuration", "P", "R", "F1", "W"}, 2);
    for (const auto& r : rows) {
        const auto& m = r.report.weighted_macro;
        table.add({std::to_string(r.number) + ".", r.label, pct(m.precision), pct(m.recall), pct(m.f1),
                   fixed(r.report.weighted_weight, 2)});
    }
    return "Weighted macro average over held-out courses\n" + table.str();
}

std::string format_kappa(const KappaResult& result) {
    TextTable table({"Pair", "Observed", "Chance", "Kappa"});
    for (const auto& p : result.pairs)
        table.add({p.first + " / " + p.second, fixed(p.observed, 4), fixed(p.chance, 4),
                   p.kappa ? fixed(*p.kappa, 4) : "undefined"});
    table.rule();
    table.add({"Average", "", "", result.average ? fixed(*result.average, 4) : "undefined"});
    std::ostringstream os;
    os << table.str();
    for (const auto& w : result.warnings) os << "warning: " << w << '\n';
    return os.str();
}

std::string format_tune(const TuneResult& result) {
    TextTable table({"W", "Validation F1"});
    for (const auto& [w, f1] : result.evaluated) table.add({fixed(w, 4), pct(f1)});
    table.rule();
    table.add({"best " + fixed(result.best_weight, 4), pct(result.best_f1)});
    return table.str();
}

}  // namespace intervene
