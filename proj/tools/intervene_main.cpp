// Command-line front end: corpus statistics, training, scoring and the
// evaluation experiments.  Every command prints a JSON report or a text
// table and, with --out, writes both to <dir>/<command>.{json,txt}.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intervene/artifact.hpp"
#include "intervene/common.hpp"
#include "intervene/corpus.hpp"
#include "intervene/eval.hpp"
#include "intervene/kappa.hpp"
#include "intervene/report.hpp"
#include "intervene/syngen.hpp"
#include "intervene/textprep.hpp"

namespace fs = std::filesystem;
using namespace intervene;

namespace {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kParse = 3,
    kValidation = 4,
    kDomain = 5,
};

struct Options {
    std::string corpus;
    std::string config;
    std::string features = "all";
    std::uint64_t seed = 42;
    double lambda = 1.0;
    double w_min = 1.0 / 16.0;
    double w_max = 256.0;
    unsigned jobs = 1;
    std::string out;
    std::string format = "table";
    bool fixed_clock = false;

    std::size_t folds = 10;
    std::size_t max_iters = 2000;
    double tolerance = 1e-6;
    bool include_degenerate = false;
    bool oversample = false;
    std::size_t df_min = 1;

    std::string model;
    std::string rows;
    std::string compare = "none";
    std::string annotations;
    std::string tag;
    std::string spec;
    double scale = 1.0;
    std::string output;
    std::string dump_spec;
    std::size_t top = 0;
};

TextprepConfig load_textprep(const Options& o) {
    return o.config.empty() ? TextprepConfig::defaults() : TextprepConfig::load(o.config);
}

ExperimentConfig experiment_config(const Options& o) {
    ExperimentConfig cfg;
    cfg.features = FeatureFlags::parse(o.features);
    cfg.lambda = o.lambda;
    cfg.max_iters = o.max_iters;
    cfg.tolerance = o.tolerance;
    cfg.grid.w_min = o.w_min;
    cfg.grid.w_max = o.w_max;
    cfg.seed = o.seed;
    cfg.jobs = o.jobs;
    cfg.folds = o.folds;
    cfg.include_degenerate = o.include_degenerate;
    cfg.oversample = o.oversample;
    cfg.df_min = o.df_min;
    return cfg;
}

/// Resolved settings echoed into every report.  Worker count is left out
/// because results never depend on it.
Json provenance(const std::string& command, const Options& o) {
    Json j{{"command", command}};
    if (!o.corpus.empty()) j["corpus"] = o.corpus;
    j["textprep_config"] = o.config.empty() ? "builtin" : o.config;
    j["features"] = FeatureFlags::parse(o.features).to_string();
    j["seed"] = o.seed;
    j["lambda"] = o.lambda;
    j["w_min"] = o.w_min;
    j["w_max"] = o.w_max;
    j["w_factor"] = 2.0;
    j["w_refine"] = true;
    j["folds"] = o.folds;
    j["fit_fraction"] = 0.75;
    j["max_iters"] = o.max_iters;
    j["tolerance"] = o.tolerance;
    j["include_degenerate"] = o.include_degenerate;
    j["oversample"] = o.oversample;
    j["df_min"] = o.df_min;
    j["w_tuned_on"] = command == "loocv" || command == "ablate" || command == "baseline"
                          ? "inner 75/25 split of the pooled training courses"
                          : "inner 75/25 split of the training portion";
    if (!o.model.empty()) j["model"] = o.model;
    if (!o.rows.empty()) j["rows"] = o.rows;
    if (command == "baseline") j["compare"] = o.compare;
    if (!o.annotations.empty()) j["annotations"] = o.annotations;
    if (!o.tag.empty()) j["tag"] = o.tag;
    if (command == "synth") {
        j["spec"] = o.spec.empty() ? "default" : o.spec;
        j["scale"] = o.scale;
        if (!o.output.empty()) j["output"] = o.output;
    }
    j["textprep"] = Json::parse(load_textprep(o).dump());
    return j;
}

void emit(const std::string& command, const Options& o, Json result, const std::string& table) {
    const auto report = report_envelope(command, report_timestamp(o.fixed_clock), provenance(command, o),
                                        std::move(result));
    const std::string json_text = report.dump(2) + "\n";
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream(fs::path(o.out) / (command + ".json")) << json_text;
        std::ofstream(fs::path(o.out) / (command + ".txt")) << table;
    }
    std::cout << (o.format == "json" ? json_text : table);
}

Corpus require_corpus(const Options& o) {
    if (o.corpus.empty()) throw CLI::RequiredError("--corpus");
    return load_corpus(o.corpus);
}

// ---------------------------------------------------------------------------

void cmd_stats(const Options& o) {
    const auto stats = compute_stats(require_corpus(o));
    emit("stats", o, to_json(stats), format_stats(stats));
}

void cmd_train(const Options& o) {
    const auto corpus = require_corpus(o);
    const auto cfg = experiment_config(o);
    const TextProcessor prep(load_textprep(o));
    const ExperimentData data(corpus, prep, cfg);
    std::vector<std::size_t> all(data.instance_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto pipeline = fit_pipeline(data, all, cfg, Rng::derive(cfg.seed, 0), false);

    ModelArtifact artifact{prep.config(), pipeline.featurizer, pipeline.params, pipeline.lambda,
                           pipeline.class_weight, cfg.seed};
    if (o.model.empty()) throw CLI::RequiredError("--model");
    artifact.save(o.model);

    Json result{{"model", o.model},
                {"instances", all.size()},
                {"dimension", pipeline.params.weights.size()},
                {"nonzero_weights", pipeline.params.nonzeros()},
                {"class_weight", pipeline.class_weight},
                {"tuned", pipeline.tuned}};
    if (!pipeline.note.empty()) result["note"] = pipeline.note;
    std::ostringstream table;
    table << "model written to " << o.model << "\n"
          << "instances " << all.size() << ", dimension " << pipeline.params.weights.size() << ", nonzero weights "
          << pipeline.params.nonzeros() << ", W " << fixed(pipeline.class_weight, 4) << "\n";
    emit("train", o, std::move(result), table.str());
}

struct Scored {
    std::string course_id;
    std::string thread_id;
    double probability;
    bool label;
    bool gold;
};

std::vector<Scored> score(const Options& o) {
    if (o.model.empty()) throw CLI::RequiredError("--model");
    const auto artifact = ModelArtifact::load(o.model);
    const auto corpus = require_corpus(o);
    const TextProcessor prep(artifact.textprep);
    std::vector<Scored> out;
    for (const auto& course : corpus.courses)
        for (const auto& thread : course.threads) {
            const auto t = truncate_at_first_intervention(thread);
            const auto p = predict(artifact.params, artifact.featurizer.transform(t.thread, prep));
            out.push_back({course.id, thread.id, p.probability, p.label, t.intervened});
        }
    return out;
}

Json scored_json(const std::vector<Scored>& rows) {
    Json arr = Json::array();
    for (const auto& s : rows)
        arr.push_back({{"course_id", s.course_id},
                       {"thread_id", s.thread_id},
                       {"probability", s.probability},
                       {"label", s.label},
                       {"intervened", s.gold}});
    return arr;
}

std::string scored_table(const std::vector<Scored>& rows, bool ranked) {
    std::vector<std::string> header;
    if (ranked) header.emplace_back("Rank");
    for (const char* h : {"Course", "Thread", "Probability", "Label", "Intervened"}) header.emplace_back(h);
    TextTable table(header, ranked ? 0 : 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& s = rows[i];
        std::vector<std::string> row;
        if (ranked) row.push_back(std::to_string(i + 1));
        row.insert(row.end(), {s.course_id, s.thread_id, fixed(s.probability, 4), s.label ? "1" : "0", s.gold ? "1" : "0"});
        table.add(std::move(row));
    }
    return table.str();
}

void cmd_predict(const Options& o) {
    const auto rows = score(o);
    std::vector<bool> pred, gold;
    for (const auto& s : rows) {
        pred.push_back(s.label);
        gold.push_back(s.gold);
    }
    Json result{{"predictions", scored_json(rows)}};
    if (!rows.empty()) result["metrics"] = to_json(compute_metrics(pred, gold));
    emit("predict", o, std::move(result), scored_table(rows, false));
}

void cmd_rank(const Options& o) {
    auto rows = score(o);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Scored& a, const Scored& b) { return a.probability > b.probability; });
    if (o.top && rows.size() > o.top) rows.resize(o.top);
    emit("rank", o, Json{{"ranking", scored_json(rows)}}, scored_table(rows, true));
}

void cmd_cv(const Options& o) {
    const auto cfg = experiment_config(o);
    const TextProcessor prep(load_textprep(o));
    const ExperimentData data(require_corpus(o), prep, cfg);
    const auto report = individual_cv(data, cfg);
    emit("cv", o, to_json(report), format_experiment(report));
}

void cmd_loocv(const Options& o) {
    const auto cfg = experiment_config(o);
    const TextProcessor prep(load_textprep(o));
    const ExperimentData data(require_corpus(o), prep, cfg);
    const auto report = loo_course_cv(data, cfg);
    emit("loocv", o, to_json(report), format_experiment(report));
}

std::vector<int> parse_rows(const std::string& text) {
    std::vector<int> rows;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        std::size_t used = 0;
        int r = 0;
        try {
            r = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || r < 1 || r > 13) throw CLI::ValidationError("--rows", "rows are numbers 1 to 13");
        rows.push_back(r);
    }
    return rows;
}

void cmd_ablate(const Options& o) {
    const auto cfg = experiment_config(o);
    const TextProcessor prep(load_textprep(o));
    const ExperimentData data(require_corpus(o), prep, cfg);
    const auto selected = parse_rows(o.rows);
    const auto rows = feature_study(data, cfg, selected);
    emit("ablate", o, Json{{"rows", to_json(rows)}}, format_feature_study(rows));
}

void cmd_baseline(const Options& o) {
    const auto cfg = experiment_config(o);
    const TextProcessor prep(load_textprep(o));
    const ExperimentData data(require_corpus(o), prep, cfg);

    if (o.compare == "cv" || o.compare == "loocv") {
        const auto report = o.compare == "cv" ? individual_cv(data, cfg) : loo_course_cv(data, cfg);
        emit("baseline", o, to_json(report), format_experiment(report, true));
        return;
    }

    Json courses = Json::array();
    std::vector<Metrics> per_course;
    std::vector<double> weights;
    TextTable table({"Course", "Threads", "I.Ratio", "F1@100R"});
    for (std::size_t c = 0; c < data.course_count(); ++c) {
        std::vector<bool> gold;
        for (auto i : data.course_instances(c)) gold.push_back(data.instance(i).label);
        if (gold.empty()) continue;
        const auto m = all_positive_baseline(gold);
        const double ratio =
            static_cast<double>(std::count(gold.begin(), gold.end(), true)) / static_cast<double>(gold.size());
        courses.push_back({{"course_id", data.course_id(c)},
                           {"threads", gold.size()},
                           {"intervention_ratio", ratio},
                           {"baseline_f1_100r", to_json(m)}});
        table.add({data.course_id(c), std::to_string(gold.size()), fixed(ratio, 2), fixed(100.0 * m.f1, 2)});
        per_course.push_back(m);
        weights.push_back(static_cast<double>(gold.size()));
    }
    Json result{{"courses", courses}};
    if (!per_course.empty()) {
        const auto avg = average_metrics(per_course);
        const auto wm = weighted_average_metrics(per_course, weights);
        result["average"] = to_json(avg);
        result["weighted_macro"] = to_json(wm);
        table.rule();
        table.add({"Average", "", "", fixed(100.0 * avg.f1, 2)});
        table.add({"Weighted macro", "", "", fixed(100.0 * wm.f1, 2)});
    }
    emit("baseline", o, std::move(result), table.str());
}

void cmd_tune(const Options& o) {
    const auto cfg = experiment_config(o);
    const TextProcessor prep(load_textprep(o));
    const ExperimentData data(require_corpus(o), prep, cfg);
    std::vector<std::size_t> all(data.instance_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto pipeline = fit_pipeline(data, all, cfg, Rng::derive(cfg.seed, 0), false);
    if (!pipeline.tuned) throw DomainError(pipeline.note);
    TuneResult tune;
    tune.best_weight = pipeline.class_weight;
    tune.evaluated = pipeline.tuning;
    for (const auto& [w, f1] : tune.evaluated)
        if (w == tune.best_weight) tune.best_f1 = f1;
    emit("tune", o, to_json(tune), format_tune(tune));
}

void cmd_kappa(const Options& o) {
    if (o.annotations.empty()) throw CLI::RequiredError("--annotations");
    auto set = AnnotationSet::load(o.annotations);
    if (!o.tag.empty()) set = set.filter_by_tag(o.tag);
    const auto result = kappa(set);
    Json j = to_json(result);
    j["items"] = set.items.size();
    emit("kappa", o, std::move(j), format_kappa(result));
}

void cmd_synth(const Options& o) {
    if (!(o.scale > 0.0)) throw CLI::ValidationError("--scale", "must be positive");
    auto spec = o.spec.empty() ? default_d14_like_spec() : CorpusSpec::load(o.spec);
    spec.seed = o.seed;
    if (o.scale != 1.0) spec = scaled(spec, o.scale);
    if (!o.dump_spec.empty()) std::ofstream(o.dump_spec) << spec.dump() << '\n';
    const auto corpus = generate(spec);
    if (!o.output.empty()) save_corpus(corpus, o.output);
    const auto stats = compute_stats(corpus);
    Json result{{"spec", Json::parse(spec.dump())}, {"stats", to_json(stats)}};
    if (!o.output.empty()) result["output"] = o.output;
    emit("synth", o, std::move(result), format_stats(stats));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instructor intervention prediction for MOOC discussion threads"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* cmd, bool experiment) {
        cmd->add_option("--corpus", o.corpus, "Corpus file (JSON lines, one thread per line)");
        cmd->add_option("--config", o.config, "Text preparation config (JSON); default is the shipped one");
        cmd->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
        cmd->add_option("--out", o.out, "Directory for <command>.json and <command>.txt");
        cmd->add_option("--format", o.format, "Standard output format")
            ->check(CLI::IsMember({"json", "table"}))
            ->capture_default_str();
        cmd->add_flag("--fixed-clock", o.fixed_clock, "Stamp reports with 1970-01-01T00:00:00Z");
        if (!experiment) return;
        cmd->add_option("--features", o.features, "Feature groups, comma separated, or 'all'")->capture_default_str();
        cmd->add_option("--lambda", o.lambda, "L1 strength")->check(CLI::NonNegativeNumber)->capture_default_str();
        cmd->add_option("--w-min", o.w_min, "Smallest class weight on the tuning grid")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--w-max", o.w_max, "Largest class weight on the tuning grid")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
        cmd->add_option("--folds", o.folds, "Folds for per-course cross-validation")
            ->check(CLI::Range(2, 1000))
            ->capture_default_str();
        cmd->add_option("--max-iters", o.max_iters, "Solver iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--tolerance", o.tolerance, "Solver relative-decrease stopping threshold")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--df-min", o.df_min, "Drop terms seen in fewer training threads")->capture_default_str();
        cmd->add_flag("--include-degenerate", o.include_degenerate, "Keep threads that start with a staff item");
        cmd->add_flag("--oversample", o.oversample, "Oversample intervened threads of sparse training courses");
    };

    auto* stats = app.add_subcommand("stats", "Thread, post and intervention counts per course and forum type");
    common(stats, false);
    auto* train = app.add_subcommand("train", "Fit a model on the whole corpus and write a model artifact");
    common(train, true);
    train->add_option("--model,-m", o.model, "Model artifact to write")->required();
    auto* predict_cmd = app.add_subcommand("predict", "Score every thread with a saved model");
    common(predict_cmd, false);
    predict_cmd->add_option("--model,-m", o.model, "Model artifact")->required()->check(CLI::ExistingFile);
    auto* rank = app.add_subcommand("rank", "List threads by descending intervention probability");
    common(rank, false);
    rank->add_option("--model,-m", o.model, "Model artifact")->required()->check(CLI::ExistingFile);
    rank->add_option("--top", o.top, "Keep only the first N threads (0 keeps all)");
    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation inside each course");
    common(cv, true);
    auto* loocv = app.add_subcommand("loocv", "Leave-one-course-out cross-validation");
    common(loocv, true);
    auto* ablate = app.add_subcommand("ablate", "Feature study: 13 feature configurations under leave-one-course-out");
    common(ablate, true);
    ablate->add_option("--rows", o.rows, "Comma-separated subset of configurations 1-13 (default: all)");
    auto* baseline = app.add_subcommand("baseline", "All-positive baseline (F1@100R) per course");
    common(baseline, true);
    baseline->add_option("--compare", o.compare, "Also run the learned model")
        ->check(CLI::IsMember({"none", "cv", "loocv"}))
        ->capture_default_str();
    auto* tune = app.add_subcommand("tune", "Class-weight tuning curve on the whole corpus");
    common(tune, true);
    auto* kappa_cmd = app.add_subcommand("kappa", "Pairwise Cohen's kappa between annotators");
    common(kappa_cmd, false);
    kappa_cmd->add_option("--annotations", o.annotations, "Annotation file (JSON)")->required()->check(CLI::ExistingFile);
    kappa_cmd->add_option("--tag", o.tag, "Restrict to items carrying this tag");
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    common(synth, false);
    synth->add_option("--spec", o.spec, "Corpus spec (JSON); default is the 14-course spec")->check(CLI::ExistingFile);
    synth->add_option("--scale", o.scale, "Multiply every course's thread count")->capture_default_str();
    synth->add_option("--output,-o", o.output, "Corpus file to write");
    synth->add_option("--dump-spec", o.dump_spec, "Write the resolved spec (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*stats) cmd_stats(o);
        else if (*train) cmd_train(o);
        else if (*predict_cmd) cmd_predict(o);
        else if (*rank) cmd_rank(o);
        else if (*cv) cmd_cv(o);
        else if (*loocv) cmd_loocv(o);
        else if (*ablate) cmd_ablate(o);
        else if (*baseline) cmd_baseline(o);
        else if (*tune) cmd_tune(o);
        else if (*kappa_cmd) cmd_kappa(o);
        else if (*synth) cmd_synth(o);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const DomainError& e) {
        std::cerr << "cannot run: " << e.what() << '\n';
        return kDomain;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kDomain;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}
