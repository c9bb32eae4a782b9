#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "intervene/corpus.hpp"
#include "intervene/eval.hpp"
#include "intervene/kappa.hpp"
#include "intervene/model.hpp"

namespace intervene {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFixedClock = "1970-01-01T00:00:00Z";

/// Current UTC time as ISO 8601, or kFixedClock.
std::string report_timestamp(bool fixed_clock);

/// {"command", "generated_at", "config", "result"}
Json report_envelope(const std::string& command, const std::string& generated_at, Json config, Json result);

Json to_json(const Metrics& m);
Json to_json(const CorpusStats& stats);
CorpusStats stats_from_json(const Json& j);
Json to_json(const CourseResult& r);
Json to_json(const ExperimentReport& report);
Json to_json(std::span<const FeatureStudyRow> rows);
Json to_json(const KappaResult& result);
Json to_json(const TuneResult& result);

/// Per course and forum type: threads, items, intervened threads, ratio.
std::string format_stats(const CorpusStats& stats);
/// Per course: threads, ratio, P, R, F1 and W, then the two averages.
/// With `baseline`, adds the all-positive F1 (F1@100R) column.
std::string format_experiment(const ExperimentReport& report, bool baseline = false);
/// Numbered configurations with weighted-macro P, R, F1.
std::string format_feature_study(std::span<const FeatureStudyRow> rows);
std::string format_kappa(const KappaResult& result);
std::string format_tune(const TuneResult& result);

/// Fixed-column text table.  The first `left_columns` columns are
/// left-aligned labels, the rest right-aligned numbers.
class TextTable {
public:
    explicit TextTable(std::vector<std::string> header, std::size_t left_columns = 1);
    void add(std::vector<std::string> row);
    void rule();
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::size_t left_;
};

/// printf("%.*f") without locale surprises.
std::string fixed(double v, int digits);

}  // namespace intervene
