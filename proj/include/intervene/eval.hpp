#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intervene/corpus.hpp"
#include "intervene/features.hpp"
#include "intervene/metrics.hpp"
#include "intervene/model.hpp"

namespace intervene {

// ---------------------------------------------------------------------------
// Splits

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded split of positions [0, labels.size()), stratified by label.  Each
/// class sends round(count * (1 - train_fraction)) members to test; a class
/// with at least two members keeps one on each side.
Split stratified_split(const std::vector<bool>& labels, double train_fraction, std::uint64_t seed);

/// Positions into course.threads.  Needs at least 5 threads.
Split split_course(const Course& course, double train_fraction, std::uint64_t seed);

/// k stratified folds over positions [0, labels.size()).  Every position
/// lands in exactly one fold; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<bool>& labels, std::size_t k,
                                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment configuration and prepared data

struct ExperimentConfig {
    FeatureFlags features = FeatureFlags::all();
    /// L1 strength against the summed (not averaged) weighted log-loss.
    double lambda = 1.0;
    std::size_t max_iters = 2000;
    double tolerance = 1e-6;
    WeightGrid grid;
    std::uint64_t seed = 42;
    /// Worker threads; results never depend on it.
    unsigned jobs = 1;
    std::size_t folds = 10;
    /// Share of the training portion used to fit while tuning W; the rest validates.
    double fit_fraction = 0.75;
    /// Average fold metrics by pooling confusion counts instead of averaging rates.
    bool pooled_folds = false;
    /// Keep threads whose first item is Staff-authored (empty after truncation).
    bool include_degenerate = false;
    /// Oversample intervened threads of sparse training courses up to the
    /// corpus-wide intervention density.
    bool oversample = false;
    std::size_t df_min = 1;
};

/// A corpus truncated, analyzed and interned once so that many experiments
/// can share it.
class ExperimentData {
public:
    struct Instance {
        std::size_t course = 0;
        std::string thread_id;
        bool label = false;
        std::size_t prepared = 0;
        /// Oversampled copy of another instance.
        bool duplicate = false;
    };

    ExperimentData(const Corpus& corpus, const TextProcessor& prep, const ExperimentConfig& cfg);

    std::size_t course_count() const { return course_ids_.size(); }
    const std::string& course_id(std::size_t c) const { return course_ids_[c]; }
    /// Original (non-duplicate) instances of a course.
    const std::vector<std::size_t>& course_instances(std::size_t c) const { return course_instances_[c]; }
    /// Oversampled copies belonging to a course (empty unless oversampling).
    const std::vector<std::size_t>& course_duplicates(std::size_t c) const { return course_duplicates_[c]; }

    const Instance& instance(std::size_t i) const { return instances_[i]; }
    std::size_t instance_count() const { return instances_.size(); }
    const PreparedThread& prepared(std::size_t i) const { return prepared_[instances_[i].prepared]; }
    const TermDictionary& dictionary() const { return dictionary_; }
    /// "course/thread" with any oversampling suffix stripped.
    std::string source_key(std::size_t i) const;
    std::size_t excluded_degenerate() const { return excluded_degenerate_; }

private:
    std::vector<std::string> course_ids_;
    std::vector<Instance> instances_;
    std::vector<std::vector<std::size_t>> course_instances_;
    std::vector<std::vector<std::size_t>> course_duplicates_;
    std::vector<PreparedThread> prepared_;
    TermDictionary dictionary_;
    std::size_t excluded_degenerate_ = 0;
};

/// Which instances fed which training structure of one fitted pipeline.
struct TrainingTrace {
    std::vector<std::size_t> tuning_fit;
    std::vector<std::size_t> tuning_validation;
    std::vector<std::size_t> final_fit;
};

struct FittedPipeline {
    Featurizer featurizer;
    ModelParams params;
    double class_weight = 1.0;
    double lambda = 0.0;
    bool tuned = false;
    std::vector<std::pair<double, double>> tuning;
    /// Set when the training set held one class only; the pipeline then
    /// predicts that class for everything.
    std::optional<bool> constant_label;
    std::string note;
};

/// Tunes W on an inner stratified split of `train`, then refits features
/// and weights on all of `train`.  With `allow_constant`, a single-class
/// training set yields a constant predictor instead of a DomainError.
FittedPipeline fit_pipeline(const ExperimentData& data, std::span<const std::size_t> train,
                            const ExperimentConfig& cfg, std::uint64_t seed, bool allow_constant = true,
                            TrainingTrace* trace = nullptr);

std::vector<double> predict_probabilities(const FittedPipeline& pipeline, const ExperimentData& data,
                                          std::span<const std::size_t> instances);
std::vector<bool> predict_instances(const FittedPipeline& pipeline, const ExperimentData& data,
                                    std::span<const std::size_t> instances);

// ---------------------------------------------------------------------------
// Reports

struct CourseResult {
    std::string course_id;
    std::size_t threads = 0;
    std::size_t positives = 0;
    double intervention_ratio = 0.0;
    Metrics metrics;
    /// All-positive predictor on the same test instances.
    Metrics baseline;
    double class_weight = 1.0;
    std::vector<Metrics> folds;
    std::vector<double> fold_weights;
    std::string note;
};

struct ExperimentReport {
    std::string kind;
    FeatureFlags features;
    std::vector<CourseResult> courses;
    Metrics average;
    Metrics weighted_macro;
    Metrics baseline_average;
    Metrics baseline_weighted_macro;
    double average_ratio = 0.0;
    double weighted_ratio = 0.0;
    double average_weight = 0.0;
    double weighted_weight = 0.0;
    std::size_t total_threads = 0;

    /// Recomputes every aggregate from `courses`; weights are thread counts.
    void finalize();
};

/// Ten-fold (cfg.folds) stratified cross-validation inside one course.
CourseResult cross_validate_course(const ExperimentData& data, std::size_t course, const ExperimentConfig& cfg);

/// cross_validate_course for every course.
ExperimentReport individual_cv(const ExperimentData& data, const ExperimentConfig& cfg);

/// Called once per held-out course with what went into its model.
using LooObserver = std::function<void(std::size_t held_out, const TrainingTrace&, const FittedPipeline&)>;

/// Result of one leave-one-course-out fold.
CourseResult loo_fold(const ExperimentData& data, std::size_t held_out, const ExperimentConfig& cfg,
                      const LooObserver& observer = {});

/// Trains on all other courses and tests on each course in turn.  Throws
/// std::logic_error if any held-out thread reaches a training structure.
ExperimentReport loo_course_cv(const ExperimentData& data, const ExperimentConfig& cfg,
                               const LooObserver& observer = {});

struct FeatureStudyRow {
    int number = 0;
    std::string label;
    FeatureFlags flags;
    ExperimentReport report;
};

/// The 13 feature configurations: rows 1-7 add one group at a time, rows
/// 8-13 remove one group from the full set.
std::vector<FeatureStudyRow> feature_study_rows();

/// loo_course_cv for each selected row (all 13 when `rows` is empty).
std::vector<FeatureStudyRow> feature_study(const ExperimentData& data, const ExperimentConfig& cfg,
                                           std::span<const int> rows = {});

/// Sample Pearson correlation.  Needs equal lengths >= 2 and nonzero
/// variance in both inputs.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace intervene
