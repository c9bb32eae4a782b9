#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "intervene/eval.hpp"
#include "intervene/kappa.hpp"
#include "intervene/metrics.hpp"
#include "intervene/model.hpp"
#include "intervene/syngen.hpp"

using namespace intervene;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Runner {
public:
    void check(int number, double limit_seconds, const std::function<Outcome()>& body) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < limit_seconds;
        const bool pass = o.pass && in_time;
        failures_ += pass ? 0 : 1;
        char timing[96];
        std::snprintf(timing, sizeof timing, "%.2f s of %.0f s", secs, limit_seconds);
        std::cout << "criterion " << number << ": " << (pass ? "PASS" : "FAIL") << " (" << o.detail << "; " << timing
                  << (in_time ? "" : ", too slow") << ")" << std::endl;
    }
    int failures() const { return failures_; }

private:
    int failures_ = 0;
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome metric_algebra() {
    Rng rng(1);
    double worst = 0.0;
    std::size_t baseline_mismatch = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = Metrics::from_counts(1 + rng.below(500), rng.below(500), rng.below(500), rng.below(500));
        const double ref = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        worst = std::max(worst, std::abs(m.f1 - ref));

        const auto n = 1 + rng.below(500);
        std::vector<bool> gold(n, false);
        const auto pos = 1 + rng.below(n);
        std::fill(gold.begin(), gold.begin() + static_cast<std::ptrdiff_t>(pos), true);
        const double p = static_cast<double>(pos) / static_cast<double>(n);
        if (all_positive_baseline(gold).f1 != 2.0 * p / (1.0 + p)) ++baseline_mismatch;
    }
    return {worst <= 1e-12 && baseline_mismatch == 0,
            "max |F1 - 2PR/(P+R)| " + num(worst, 17) + ", baseline mismatches " + std::to_string(baseline_mismatch)};
}

// ---------------------------------------------------------------------------

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d) {
    Dataset ds(d);
    std::vector<double> truth(d);
    for (auto& t : truth) t = rng.uniform() * 4.0 - 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        SparseVector v;
        v.dim = d;
        double m = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            if (rng.bernoulli(0.4)) {
                const double x = rng.uniform() * 2.0 - 1.0;
                v.index.push_back(static_cast<std::uint32_t>(j));
                v.value.push_back(x);
                m += x * truth[j];
            }
        ds.add(v, rng.bernoulli(sigmoid(m)));
    }
    return ds;
}

Outcome solver() {
    Rng rng(2);
    double worst_rel = 0.0;
    bool monotone = true;
    for (int inst = 0; inst < 20; ++inst) {
        const auto ds = random_dataset(rng, 20 + rng.below(30), 2 + rng.below(8));
        TrainConfig cfg;
        cfg.lambda = 0.0;
        cfg.class_weight = 0.5 + rng.uniform() * 3.0;
        ModelParams p;
        p.weights.resize(ds.x.cols());
        for (auto& w : p.weights) w = rng.uniform() - 0.5;
        p.bias = rng.uniform() - 0.5;
        const auto g = smooth_gradient(p, ds, cfg);
        for (std::size_t j = 0; j <= p.weights.size(); ++j) {
            auto plus = p, minus = p;
            const double h = 1e-6;
            (j < p.weights.size() ? plus.weights[j] : plus.bias) += h;
            (j < p.weights.size() ? minus.weights[j] : minus.bias) -= h;
            const double fd = (objective(plus, ds, cfg) - objective(minus, ds, cfg)) / (2.0 * h);
            const double an = j < p.weights.size() ? g.weights[j] : g.bias;
            worst_rel = std::max(worst_rel, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
        }
        TrainConfig fit;
        fit.lambda = 0.1 + rng.uniform();
        fit.class_weight = cfg.class_weight;
        const auto r = train(ds, fit);
        for (std::size_t k = 1; k < r.objective_trace.size(); ++k)
            monotone = monotone && r.objective_trace[k] <= r.objective_trace[k - 1];
    }

    const auto big = random_dataset(rng, 60, 10);
    TrainConfig huge;
    huge.lambda = 1e6;
    const auto zero = train(big, huge).params.nonzeros();

    Dataset sep(3);
    for (int i = 0; i < 40; ++i) {
        const bool y = i % 2 == 0;
        sep.add(SparseVector{3, {0, 2}, {y ? 1.0 : -1.0, rng.uniform()}}, y);
    }
    TrainConfig light;
    light.lambda = 1e-2;
    const double f1 = compute_metrics(predict_labels(train(sep, light).params, sep), sep.y).f1;

    return {worst_rel <= 1e-5 && monotone && zero == 0 && f1 == 1.0,
            "gradient rel err " + num(worst_rel, 9) + ", monotone " + (monotone ? "yes" : "no") +
                ", nonzeros at lambda 1e6 " + std::to_string(zero) + ", separable F1 " + num(f1, 4)};
}

// ---------------------------------------------------------------------------

Outcome tf_itf_oracle() {
    const TextProcessor prep;
    Rng rng(3);
    std::size_t mismatches = 0, vectors = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> pool;
        for (std::size_t i = 0, n = 1 + rng.below(50); i < n; ++i)
            pool.push_back(std::string("zq") + char('a' + i / 26) + char('a' + i % 26));
        std::vector<Thread> threads;
        std::vector<std::vector<std::string>> words;
        for (std::size_t t = 0, n = 1 + rng.below(10); t < n; ++t) {
            std::vector<std::string> w;
            std::string text;
            for (std::size_t k = 0, len = rng.below(12); k < len; ++k) {
                w.push_back(pool[rng.below(pool.size())]);
                text += (text.empty() ? "" : " ") + w.back();
            }
            Thread th{std::to_string(t), "c", ForumType::Lecture, "", {}};
            th.posts.push_back({"p0", AuthorRole::Student, 1, text, {}});
            threads.push_back(std::move(th));
            words.push_back(std::move(w));
        }
        std::set<std::string> vocab;
        for (const auto& w : words) vocab.insert(w.begin(), w.end());
        const auto built = Vocabulary::build(threads, prep);
        for (std::size_t t = 0; t < threads.size(); ++t) {
            SparseVector expect;
            expect.dim = vocab.size();
            std::uint32_t index = 0;
            for (const auto& term : vocab) {
                std::size_t df = 0, tf = 0;
                for (const auto& doc : words) {
                    bool seen = false;
                    for (const auto& w : doc) seen = seen || w == term;
                    df += seen;
                }
                for (const auto& w : words[t]) tf += w == term;
                const double v = static_cast<double>(tf) *
                                 std::log(static_cast<double>(words.size()) / static_cast<double>(df));
                if (v != 0.0) {
                    expect.index.push_back(index);
                    expect.value.push_back(v);
                }
                ++index;
            }
            double sq = 0.0;
            for (double v : expect.value) sq += v * v;
            const double norm = std::sqrt(sq);
            if (norm > 0.0)
                for (auto& v : expect.value) v /= norm;
            ++vectors;
            mismatches += !(tf_itf_vector(threads[t], built, prep) == expect);
        }
    }
    return {mismatches == 0, std::to_string(vectors) + " vectors, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------

bool has_staff(const Thread& t) {
    for (const auto& p : t.posts) {
        if (p.role == AuthorRole::Staff) return true;
        for (const auto& c : p.comments)
            if (c.role == AuthorRole::Staff) return true;
    }
    return false;
}

Outcome leakage() {
    const auto full = generate(default_d14_like_spec());
    std::size_t intervened = 0, leaked_staff = 0;
    for (const auto& course : full.courses)
        for (const auto& t : course.threads) {
            const auto tr = truncate_at_first_intervention(t);
            if (!tr.intervened) continue;
            ++intervened;
            leaked_staff += has_staff(tr.thread);
        }

    const TextProcessor prep;
    ExperimentConfig cfg;
    const auto small = generate(scaled(default_d14_like_spec(), 0.03));
    const ExperimentData data(small, prep, cfg);
    std::size_t leaked_ids = 0, checked = 0, folds = 0;
    loo_course_cv(data, cfg, [&](std::size_t held, const TrainingTrace& trace, const FittedPipeline&) {
        ++folds;
        std::set<std::string> test_ids;
        for (auto i : data.course_instances(held)) test_ids.insert(data.source_key(i));
        for (const auto* part : {&trace.tuning_fit, &trace.tuning_validation, &trace.final_fit})
            for (auto i : *part) {
                ++checked;
                leaked_ids += test_ids.count(data.source_key(i)) || data.instance(i).course == held;
            }
    });
    return {leaked_staff == 0 && leaked_ids == 0 && folds == data.course_count() && checked > 0,
            std::to_string(intervened) + " truncated threads with " + std::to_string(leaked_staff) +
                " staff items; " + std::to_string(folds) + " held-out courses, " + std::to_string(checked) +
                " training references, " + std::to_string(leaked_ids) + " test ids"};
}

// ---------------------------------------------------------------------------

struct FullRun {
    std::vector<FeatureStudyRow> rows;
};

FullRun& full_run() {
    static FullRun run;
    return run;
}

Outcome feature_ordering() {
    const TextProcessor prep;
    ExperimentConfig cfg;
    const auto corpus = generate(default_d14_like_spec());
    const ExperimentData data(corpus, prep, cfg);
    const std::vector<int> rows{1, 2, 7};
    full_run().rows = feature_study(data, cfg, rows);
    const auto& r = full_run().rows;
    const double f1 = 100.0 * r[0].report.weighted_macro.f1;
    const double f2 = 100.0 * r[1].report.weighted_macro.f1;
    const double f7 = 100.0 * r[2].report.weighted_macro.f1;
    return {f2 - f1 >= 1.0 && f7 - f1 >= 3.0, "weighted macro F1 unigrams " + num(f1, 2) + ", + forum type " +
                                                  num(f2, 2) + " (" + num(f2 - f1, 2) + "), all groups " + num(f7, 2) +
                                                  " (" + num(f7 - f1, 2) + ")"};
}

Outcome baseline_crossover() {
    if (full_run().rows.size() != 3) return {false, "leave-one-course-out results unavailable"};
    std::size_t high = 0, beaten = 0;
    std::string detail;
    for (const auto& c : full_run().rows[2].report.courses) {
        if (c.intervention_ratio < 0.7) continue;
        ++high;
        beaten += c.baseline.f1 > c.metrics.f1;
        detail += c.course_id + " ratio " + num(c.intervention_ratio, 2) + " model " + num(100.0 * c.metrics.f1, 2) +
                  " baseline " + num(100.0 * c.baseline.f1, 2) + "; ";
    }
    return {high > 0 && beaten > 0, detail + std::to_string(beaten) + " of " + std::to_string(high) +
                                        " high-ratio courses favor the baseline"};
}

Outcome correlation() {
    if (full_run().rows.size() != 3) return {false, "leave-one-course-out results unavailable"};
    std::vector<double> ratio, f1;
    for (const auto& c : full_run().rows[2].report.courses) {
        ratio.push_back(c.intervention_ratio);
        f1.push_back(c.metrics.f1);
    }
    const double synthetic = pearson(ratio, f1);

    std::ifstream in(INTERVENE_FIXTURES "/course_ratio_f1.json");
    const auto j = nlohmann::json::parse(in);
    std::vector<double> pr, pf;
    for (const auto& c : j.at("courses")) {
        pr.push_back(c.at("ratio"));
        pf.push_back(c.at("f1"));
    }
    const double reference = pearson(pr, pf);
    return {synthetic > 0.0 && synthetic <= 1.0 && std::abs(reference - 0.93) <= 0.02,
            "synthetic " + num(synthetic) + ", reference fixture " + num(reference)};
}

// ---------------------------------------------------------------------------

Outcome kappa_checks() {
    const std::vector<bool> a{true, false, true, true, false};
    const bool identical = cohen_kappa(a, a).kappa == 1.0;
    const auto cb = cohen_kappa({true, true, false, false}, {true, false, true, false});
    const bool checker = cb.kappa && *cb.kappa == 0.0;
    Rng rng(8);
    std::size_t violations = 0, sets = 0;
    while (sets < 100) {
        const auto n = 2 + rng.below(30);
        std::vector<bool> x(n), y(n), fx(n), fy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.bernoulli(0.5);
            y[i] = rng.bernoulli(0.7) ? x[i] : !x[i];
            fx[i] = !x[i];
            fy[i] = !y[i];
        }
        const auto k = cohen_kappa(x, y);
        if (!k.kappa) continue;
        ++sets;
        const auto s = cohen_kappa(y, x), r = cohen_kappa(fx, fy);
        violations += !s.kappa || std::abs(*s.kappa - *k.kappa) > 1e-12;
        violations += !r.kappa || std::abs(*r.kappa - *k.kappa) > 1e-12;
    }
    return {identical && checker && violations == 0,
            std::string("identical ") + (identical ? "1" : "not 1") + ", checkerboard " +
                (cb.kappa ? num(*cb.kappa, 17) : "undefined") + ", " + std::to_string(violations) +
                " symmetry/relabel violations over " + std::to_string(sets) + " sets"};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd = std::string(INTERVENE_CLI) + " " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto dir = fs::temp_directory_path() / ("intervene_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string corpus = "'" + (dir / "corpus.jsonl").string() + "'";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"synth", "synth --scale 0.05 --seed 7 -o " + corpus},
        {"cv", "cv --corpus " + corpus + " --folds 5"},
        {"loocv", "loocv --corpus " + corpus},
        {"ablate", "ablate --corpus " + corpus},
    };
    std::string detail;
    bool ok = true;
    for (const auto& [name, args] : commands) {
        std::string first;
        for (const char* pass : {"a", "b"}) {
            const auto out = dir / pass;
            const int status = run_cli(args + " --fixed-clock --out '" + out.string() + "'");
            if (status != 0) {
                ok = false;
                detail += name + " exited " + std::to_string(status) + "; ";
            }
        }
        const auto a = slurp(dir / "a" / (name + ".json")), b = slurp(dir / "b" / (name + ".json"));
        const bool same = !a.empty() && a == b;
        ok = ok && same;
        detail += name + (same ? " identical" : " differs") + " (" + std::to_string(a.size()) + " bytes); ";
    }
    fs::remove_all(dir);
    return {ok, detail.substr(0, detail.size() - 2)};
}

}  // namespace

int main() {
    Runner runner;
    runner.check(1, 1.0, metric_algebra);
    runner.check(2, 30.0, solver);
    runner.check(3, 10.0, tf_itf_oracle);
    runner.check(4, 10.0, leakage);
    runner.check(5, 300.0, feature_ordering);
    runner.check(6, 120.0, baseline_crossover);
    runner.check(7, 1.0, correlation);
    runner.check(8, 1.0, kappa_checks);
    runner.check(9, 300.0, determinism);
    std::cout << (runner.failures() ? "acceptance: " + std::to_string(runner.failures()) + " criteria failed"
                                    : std::string("acceptance: all criteria passed"))
              << std::endl;
    return runner.failures() ? 1 : 0;
}
