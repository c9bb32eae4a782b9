#include "intervene/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace intervene {

namespace {

/// Stable stream id for a string (FNV-1a), so seeds do not depend on
/// container order.
std::uint64_t stream_of(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t test_share(std::size_t count, double train_fraction) {
    auto k = static_cast<std::size_t>(std::lround(static_cast<double>(count) * (1.0 - train_fraction)));
    if (count >= 2) k = std::clamp<std::size_t>(k, 1, count - 1);
    else k = 0;
    return k;
}

}  // namespace

Split stratified_split(const std::vector<bool>& labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    Split s;
    for (auto* group : {&pos, &neg}) {
        const auto k = test_share(group->size(), train_fraction);
        s.test.insert(s.test.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(k));
        s.train.insert(s.train.end(), group->begin() + static_cast<std::ptrdiff_t>(k), group->end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

Split split_course(const Course& course, double train_fraction, std::uint64_t seed) {
    if (course.threads.size() < 5)
        throw DomainError("course \"" + course.id + "\" has too few threads to split (need 5)");
    std::vector<bool> labels;
    for (const auto& t : course.threads) labels.push_back(label_thread(t));
    return stratified_split(labels, train_fraction, seed);
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<bool>& labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("need at least 2 folds");
    if (labels.size() < k) throw DomainError("fewer instances than folds");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t slot = 0;
    for (auto* group : {&pos, &neg})
        for (auto i : *group) folds[slot++ % k].push_back(i);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

// ---------------------------------------------------------------------------

ExperimentData::ExperimentData(const Corpus& corpus, const TextProcessor& prep, const ExperimentConfig& cfg) {
    std::vector<Thread> observable;
    std::vector<Course> kept_courses;
    for (std::size_t c = 0; c < corpus.courses.size(); ++c) {
        const auto& course = corpus.courses[c];
        course_ids_.push_back(course.id);
        course_instances_.emplace_back();
        course_duplicates_.emplace_back();
        Course kept{course.id, {}};
        for (const auto& t : course.threads) {
            auto tr = truncate_at_first_intervention(t);
            if (tr.degenerate && !cfg.include_degenerate) {
                ++excluded_degenerate_;
                continue;
            }
            course_instances_[c].push_back(instances_.size());
            instances_.push_back({c, t.id, tr.intervened, observable.size(), false});
            observable.push_back(std::move(tr.thread));
            if (cfg.oversample) kept.threads.push_back(t);
        }
        kept_courses.push_back(std::move(kept));
    }

    if (cfg.oversample) {
        std::size_t total = 0, positives = 0;
        for (const auto& inst : instances_) {
            ++total;
            positives += inst.label ? 1 : 0;
        }
        const double target = total ? static_cast<double>(positives) / static_cast<double>(total) : 0.0;
        for (std::size_t c = 0; c < kept_courses.size(); ++c) {
            const auto& kept = kept_courses[c];
            if (kept.threads.empty() || target >= 1.0) continue;
            Course grown;
            try {
                grown = oversample_to_density(kept, target, Rng::derive(cfg.seed, stream_of("oversample/" + kept.id)));
            } catch (const DomainError&) {
                continue;  // nothing intervened to copy
            }
            std::unordered_map<std::string, std::size_t> by_id;
            for (auto i : course_instances_[c]) by_id.emplace(instances_[i].thread_id, i);
            for (std::size_t k = kept.threads.size(); k < grown.threads.size(); ++k) {
                const auto& id = grown.threads[k].id;
                const auto& source = instances_[by_id.at(id.substr(0, id.rfind("#dup")))];
                course_duplicates_[c].push_back(instances_.size());
                instances_.push_back({c, id, source.label, source.prepared, true});
            }
        }
    }

    std::vector<const Thread*> ptrs;
    ptrs.reserve(observable.size());
    for (const auto& t : observable) ptrs.push_back(&t);
    prepared_ = prepare_threads(ptrs, prep, dictionary_);
}

std::string ExperimentData::source_key(std::size_t i) const {
    const auto& inst = instances_[i];
    const auto& id = inst.thread_id;
    const auto cut = inst.duplicate ? id.rfind("#dup") : std::string::npos;
    return course_ids_[inst.course] + "/" + id.substr(0, cut);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<const PreparedThread*> prepared_of(const ExperimentData& data, std::span<const std::size_t> idx) {
    std::vector<const PreparedThread*> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(&data.prepared(i));
    return out;
}

Dataset make_dataset(const Featurizer& f, const ExperimentData& data, std::span<const std::size_t> idx) {
    Dataset ds(f.dimension());
    for (auto i : idx) ds.add(f.transform(data.prepared(i), data.dictionary()), data.instance(i).label);
    return ds;
}

std::vector<bool> labels_of(const ExperimentData& data, std::span<const std::size_t> idx) {
    std::vector<bool> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(data.instance(i).label);
    return out;
}

std::vector<std::size_t> pick(std::span<const std::size_t> from, const std::vector<std::size_t>& positions) {
    std::vector<std::size_t> out;
    out.reserve(positions.size());
    for (auto p : positions) out.push_back(from[p]);
    return out;
}

}  // namespace

FittedPipeline fit_pipeline(const ExperimentData& data, std::span<const std::size_t> train_idx,
                            const ExperimentConfig& cfg, std::uint64_t seed, bool allow_constant,
                            TrainingTrace* trace) {
    if (train_idx.empty()) throw DomainError("empty training set");
    const auto labels = labels_of(data, train_idx);
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));

    FittedPipeline out;
    if (trace) trace->final_fit.assign(train_idx.begin(), train_idx.end());
    if (positives == 0 || positives == labels.size()) {
        if (!allow_constant) throw DomainError("training data must contain both classes");
        out.constant_label = positives > 0;
        out.note = "single-class training data";
        out.featurizer = Featurizer::fit(prepared_of(data, train_idx), data.dictionary(), cfg.features, cfg.df_min);
        out.params.weights.assign(out.featurizer.dimension(), 0.0);
        return out;
    }

    TrainConfig base;
    base.max_iters = cfg.max_iters;
    base.tolerance = cfg.tolerance;
    base.seed = seed;

    const auto inner = stratified_split(labels, cfg.fit_fraction, Rng::derive(seed, 1));
    const auto fit_idx = pick(train_idx, inner.train);
    const auto val_idx = pick(train_idx, inner.test);
    if (trace) {
        trace->tuning_fit = fit_idx;
        trace->tuning_validation = val_idx;
    }
    const auto fit_labels = labels_of(data, fit_idx);
    const auto fit_pos = static_cast<std::size_t>(std::count(fit_labels.begin(), fit_labels.end(), true));
    const auto val_labels = labels_of(data, val_idx);
    const bool val_has_pos = std::find(val_labels.begin(), val_labels.end(), true) != val_labels.end();

    if (fit_pos > 0 && fit_pos < fit_idx.size() && val_has_pos) {
        const auto featurizer = Featurizer::fit(prepared_of(data, fit_idx), data.dictionary(), cfg.features, cfg.df_min);
        const auto fit_ds = make_dataset(featurizer, data, fit_idx);
        const auto val_ds = make_dataset(featurizer, data, val_idx);
        base.lambda = cfg.lambda;
        const auto tuned = tune_class_weight(fit_ds, val_ds, base, cfg.grid, cfg.jobs);
        out.class_weight = tuned.best_weight;
        out.tuning = tuned.evaluated;
        out.tuned = true;
    } else {
        out.note = "class weight not tuned: validation split lacks a class";
    }

    out.featurizer = Featurizer::fit(prepared_of(data, train_idx), data.dictionary(), cfg.features, cfg.df_min);
    const auto ds = make_dataset(out.featurizer, data, train_idx);
    base.lambda = cfg.lambda;
    base.class_weight = out.class_weight;
    out.lambda = base.lambda;
    out.params = train(ds, base).params;
    return out;
}

std::vector<double> predict_probabilities(const FittedPipeline& pipeline, const ExperimentData& data,
                                          std::span<const std::size_t> instances) {
    std::vector<double> out;
    out.reserve(instances.size());
    for (auto i : instances) {
        if (pipeline.constant_label) {
            out.push_back(*pipeline.constant_label ? 1.0 : 0.0);
            continue;
        }
        out.push_back(predict(pipeline.params, pipeline.featurizer.transform(data.prepared(i), data.dictionary()))
                          .probability);
    }
    return out;
}

std::vector<bool> predict_instances(const FittedPipeline& pipeline, const ExperimentData& data,
                                    std::span<const std::size_t> instances) {
    const auto probs = predict_probabilities(pipeline, data, instances);
    std::vector<bool> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= 0.5;
    return out;
}

// ---------------------------------------------------------------------------

void ExperimentReport::finalize() {
    std::vector<Metrics> ms, bs;
    std::vector<double> weights;
    total_threads = 0;
    double ratio_sum = 0.0, weighted_ratio_sum = 0.0, w_sum = 0.0, weighted_w_sum = 0.0;
    for (const auto& c : courses) {
        ms.push_back(c.metrics);
        bs.push_back(c.baseline);
        weights.push_back(static_cast<double>(c.threads));
        total_threads += c.threads;
        ratio_sum += c.intervention_ratio;
        weighted_ratio_sum += static_cast<double>(c.threads) * c.intervention_ratio;
        w_sum += c.class_weight;
        weighted_w_sum += static_cast<double>(c.threads) * c.class_weight;
    }
    average = average_metrics(ms);
    weighted_macro = weighted_average_metrics(ms, weights);
    baseline_average = average_metrics(bs);
    baseline_weighted_macro = weighted_average_metrics(bs, weights);
    const auto n = static_cast<double>(courses.size());
    const auto total = static_cast<double>(total_threads);
    average_ratio = courses.empty() ? 0.0 : ratio_sum / n;
    average_weight = courses.empty() ? 0.0 : w_sum / n;
    weighted_ratio = total_threads ? weighted_ratio_sum / total : 0.0;
    weighted_weight = total_threads ? weighted_w_sum / total : 0.0;
}

namespace {

struct FoldOutcome {
    Metrics metrics;
    Metrics baseline;
    double class_weight = 1.0;
    std::string note;
};

ExperimentConfig sequential(const ExperimentConfig& cfg) {
    ExperimentConfig inner = cfg;
    inner.jobs = 1;
    return inner;
}

CourseResult course_header(const ExperimentData& data, std::size_t c) {
    CourseResult r;
    r.course_id = data.course_id(c);
    const auto& idx = data.course_instances(c);
    r.threads = idx.size();
    for (auto i : idx) r.positives += data.instance(i).label ? 1 : 0;
    r.intervention_ratio = r.threads ? static_cast<double>(r.positives) / static_cast<double>(r.threads) : 0.0;
    return r;
}

FoldOutcome run_cv_fold(const ExperimentData& data, std::size_t c, const std::vector<std::vector<std::size_t>>& folds,
                        std::size_t f, const ExperimentConfig& cfg) {
    const auto& members = data.course_instances(c);
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t g = 0; g < folds.size(); ++g)
        for (auto p : folds[g]) (g == f ? test_idx : train_idx).push_back(members[p]);
    const auto seed = Rng::derive(Rng::derive(cfg.seed, stream_of("cv/" + data.course_id(c))), f);
    const auto pipeline = fit_pipeline(data, train_idx, cfg, seed, true);
    const auto gold = labels_of(data, test_idx);
    return {compute_metrics(predict_instances(pipeline, data, test_idx), gold), all_positive_baseline(gold),
            pipeline.class_weight, pipeline.note};
}

std::vector<std::vector<std::size_t>> course_folds(const ExperimentData& data, std::size_t c,
                                                   const ExperimentConfig& cfg) {
    const auto& members = data.course_instances(c);
    if (members.size() < cfg.folds)
        throw DomainError("course \"" + data.course_id(c) + "\" has fewer threads than folds");
    return stratified_folds(labels_of(data, members), cfg.folds,
                            Rng::derive(cfg.seed, stream_of("folds/" + data.course_id(c))));
}

CourseResult assemble_cv(const ExperimentData& data, std::size_t c, const std::vector<FoldOutcome>& outcomes,
                         const ExperimentConfig& cfg) {
    auto r = course_header(data, c);
    std::vector<Metrics> baselines;
    double w_sum = 0.0;
    for (const auto& o : outcomes) {
        r.folds.push_back(o.metrics);
        r.fold_weights.push_back(o.class_weight);
        baselines.push_back(o.baseline);
        w_sum += o.class_weight;
        if (!o.note.empty() && r.note.find(o.note) == std::string::npos)
            r.note += (r.note.empty() ? "" : "; ") + o.note;
    }
    r.metrics = cfg.pooled_folds ? pooled_metrics(r.folds) : average_metrics(r.folds);
    r.baseline = cfg.pooled_folds ? pooled_metrics(baselines) : average_metrics(baselines);
    r.class_weight = outcomes.empty() ? 1.0 : w_sum / static_cast<double>(outcomes.size());
    return r;
}

}  // namespace

CourseResult cross_validate_course(const ExperimentData& data, std::size_t c, const ExperimentConfig& cfg) {
    const auto folds = course_folds(data, c, cfg);
    const auto inner = sequential(cfg);
    std::vector<FoldOutcome> outcomes(folds.size());
    parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) { outcomes[f] = run_cv_fold(data, c, folds, f, inner); });
    return assemble_cv(data, c, outcomes, cfg);
}

ExperimentReport individual_cv(const ExperimentData& data, const ExperimentConfig& cfg) {
    std::vector<std::vector<std::vector<std::size_t>>> folds;
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t c = 0; c < data.course_count(); ++c) {
        folds.push_back(course_folds(data, c, cfg));
        for (std::size_t f = 0; f < folds.back().size(); ++f) tasks.emplace_back(c, f);
    }
    const auto inner = sequential(cfg);
    std::vector<FoldOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t t) {
        const auto [c, f] = tasks[t];
        outcomes[t] = run_cv_fold(data, c, folds[c], f, inner);
    });

    ExperimentReport report;
    report.kind = "cv";
    report.features = cfg.features;
    std::size_t t = 0;
    for (std::size_t c = 0; c < data.course_count(); ++c) {
        std::vector<FoldOutcome> mine(outcomes.begin() + static_cast<std::ptrdiff_t>(t),
                                      outcomes.begin() + static_cast<std::ptrdiff_t>(t + folds[c].size()));
        t += folds[c].size();
        report.courses.push_back(assemble_cv(data, c, mine, cfg));
    }
    report.finalize();
    return report;
}

CourseResult loo_fold(const ExperimentData& data, std::size_t held_out, const ExperimentConfig& cfg,
                      const LooObserver& observer) {
    std::vector<std::size_t> train_idx;
    for (std::size_t c = 0; c < data.course_count(); ++c) {
        if (c == held_out) continue;
        const auto& orig = data.course_instances(c);
        const auto& dups = data.course_duplicates(c);
        train_idx.insert(train_idx.end(), orig.begin(), orig.end());
        train_idx.insert(train_idx.end(), dups.begin(), dups.end());
    }
    const auto& test_idx = data.course_instances(held_out);

    TrainingTrace trace;
    const auto seed = Rng::derive(cfg.seed, stream_of("loo/" + data.course_id(held_out)));
    const auto pipeline = fit_pipeline(data, train_idx, sequential(cfg), seed, true, &trace);

    std::unordered_set<std::string> test_keys;
    for (auto i : test_idx) test_keys.insert(data.source_key(i));
    for (const auto* stage : {&trace.tuning_fit, &trace.tuning_validation, &trace.final_fit})
        for (auto i : *stage)
            if (data.instance(i).course == held_out || test_keys.contains(data.source_key(i)))
                throw std::logic_error("held-out thread " + data.source_key(i) + " reached a training structure");
    if (observer) observer(held_out, trace, pipeline);

    auto r = course_header(data, held_out);
    const auto gold = labels_of(data, test_idx);
    r.metrics = compute_metrics(predict_instances(pipeline, data, test_idx), gold);
    r.baseline = all_positive_baseline(gold);
    r.class_weight = pipeline.class_weight;
    r.note = pipeline.note;
    return r;
}

ExperimentReport loo_course_cv(const ExperimentData& data, const ExperimentConfig& cfg, const LooObserver& observer) {
    if (data.course_count() < 2) throw DomainError("leave-one-course-out needs at least 2 courses");
    ExperimentReport report;
    report.kind = "loocv";
    report.features = cfg.features;
    report.courses.resize(data.course_count());
    parallel_for(data.course_count(), cfg.jobs,
                 [&](std::size_t c) { report.courses[c] = loo_fold(data, c, cfg, observer); });
    report.finalize();
    return report;
}

std::vector<FeatureStudyRow> feature_study_rows() {
    using G = FeatureGroup;
    const std::array<std::pair<G, const char*>, 6> additions{{{G::ForumType, "Forum Type"},
                                                              {G::CourseRef, "Course_Ref"},
                                                              {G::Affirmation, "Affirmation"},
                                                              {G::ThreadProps, "T Properties"},
                                                              {G::NumSents, "Num Sents"},
                                                              {G::NonlexRef, "Non-Lex Ref"}}};
    std::vector<FeatureStudyRow> rows;
    FeatureFlags flags = FeatureFlags().with(G::Unigrams);
    rows.push_back({1, "Unigrams", flags, {}});
    for (std::size_t k = 0; k < additions.size(); ++k) {
        flags = flags.with(additions[k].first);
        const int n = static_cast<int>(rows.size()) + 1;
        rows.push_back({n, "(" + std::to_string(n - 1) + ") + " + additions[k].second, flags, {}});
    }
    for (const auto& [group, name] : additions) {
        const int n = static_cast<int>(rows.size()) + 1;
        rows.push_back({n, "(7) - " + std::string(name), FeatureFlags::all().without(group), {}});
    }
    return rows;
}

std::vector<FeatureStudyRow> feature_study(const ExperimentData& data, const ExperimentConfig& cfg,
                                           std::span<const int> selected) {
    if (data.course_count() < 2) throw DomainError("feature study needs at least 2 courses");
    std::vector<FeatureStudyRow> rows;
    for (auto& row : feature_study_rows())
        if (selected.empty() || std::find(selected.begin(), selected.end(), row.number) != selected.end())
            rows.push_back(std::move(row));

    const std::size_t courses = data.course_count();
    std::vector<CourseResult> results(rows.size() * courses);
    parallel_for(results.size(), cfg.jobs, [&](std::size_t t) {
        ExperimentConfig row_cfg = sequential(cfg);
        row_cfg.features = rows[t / courses].flags;
        results[t] = loo_fold(data, t % courses, row_cfg);
    });
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto& rep = rows[r].report;
        rep.kind = "loocv";
        rep.features = rows[r].flags;
        rep.courses.assign(results.begin() + static_cast<std::ptrdiff_t>(r * courses),
                           results.begin() + static_cast<std::ptrdiff_t>((r + 1) * courses));
        rep.finalize();
    }
    return rows;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson inputs differ in length");
    if (xs.size() < 2) throw std::invalid_argument("pearson needs at least 2 pairs");
    const auto n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson is undefined for zero variance");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace intervene
