#include <doctest.h>

#include "helpers.hpp"
#include "intervene/artifact.hpp"
#include "intervene/report.hpp"

using namespace testing;

namespace {

Corpus tiny_corpus() {
    Corpus corpus;
    corpus.courses.push_back({"a", {}});
    corpus.courses.push_back({"b", {}});
    corpus.courses[0].threads.push_back(make_thread("a", "1", ForumType::Lecture, "q", {{S, 1, "x"}, {T, 2, "y"}}));
    corpus.courses[0].threads.push_back(make_thread("a", "2", ForumType::Exam, "q", {{S, 1, "x", {{S, 2, "z"}}}}));
    corpus.courses[1].threads.push_back(make_thread("b", "1", ForumType::Errata, "q", {{S, 1, "x"}}));
    return corpus;
}

ExperimentReport sample_report() {
    ExperimentReport rep;
    rep.kind = "cv";
    rep.features = FeatureFlags::all();
    CourseResult a;
    a.course_id = "alpha";
    a.threads = 40;
    a.positives = 10;
    a.intervention_ratio = 0.25;
    a.metrics = Metrics::from_counts(8, 4, 2, 26);
    a.baseline = Metrics::from_counts(10, 30, 0, 0);
    a.class_weight = 2.0;
    CourseResult b = a;
    b.course_id = "beta";
    b.threads = 60;
    rep.courses = {a, b};
    rep.finalize();
    return rep;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("fixed formatting") {
    CHECK(fixed(1.0 / 3.0, 2) == "0.33");
    CHECK(fixed(2.5, 0) == "2");
    CHECK(fixed(-0.125, 3) == "-0.125");
    CHECK(fixed(75.0, 2) == "75.00");
}

TEST_CASE("text table aligns columns") {
    TextTable t({"Name", "Value"});
    t.add({"a", "1.00"});
    t.add({"longer", "10.00"});
    t.rule();
    t.add({"sum", "11.00"});
    const auto s = t.str();
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t nl; (nl = s.find('\n', start)) != std::string::npos; start = nl + 1)
        lines.push_back(s.substr(start, nl - start));
    REQUIRE(lines.size() >= 5);
    for (const auto& l : lines) CHECK(l.size() == lines[0].size());
    CHECK(lines.back().find("11.00") == lines.back().size() - 5);
}

TEST_CASE("stats JSON round trip") {
    const auto stats = compute_stats(tiny_corpus());
    const auto j = to_json(stats);
    CHECK(stats_from_json(Json::parse(j.dump())) == stats);
    const auto text = format_stats(stats);
    CHECK(text.find("a") != std::string::npos);
    CHECK(text.find("b") != std::string::npos);
}

TEST_CASE("experiment report JSON and table") {
    const auto rep = sample_report();
    const auto j = Json::parse(to_json(rep).dump());
    CHECK(j.at("courses").size() == 2);
    CHECK(j.at("kind") == "cv");
    const auto table = format_experiment(rep, true);
    CHECK(table.find("alpha") != std::string::npos);
    CHECK(table.find("Weighted macro") != std::string::npos);
    CHECK(table.find("F1@100R") != std::string::npos);
    CHECK(format_experiment(rep).find("F1@100R") == std::string::npos);
    CHECK(to_json(rep).dump() == to_json(sample_report()).dump());
}

TEST_CASE("feature study table has one line per row") {
    auto rows = feature_study_rows();
    for (auto& r : rows) r.report = sample_report();
    const auto text = format_feature_study(rows);
    for (const auto& r : rows) CHECK(text.find(r.label) != std::string::npos);
    CHECK(to_json(rows).size() == 13);
}

TEST_CASE("envelope") {
    const auto e = report_envelope("cv", report_timestamp(true), Json{{"seed", 42}}, Json::object());
    CHECK(e.dump() == R"({"command":"cv","generated_at":"1970-01-01T00:00:00Z","config":{"seed":42},"result":{}})");
    CHECK(report_timestamp(false) != kFixedClock);
}

TEST_CASE("model artifact round trip") {
    const TextProcessor prep;
    const auto corpus = tiny_corpus();
    std::vector<const Thread*> threads;
    for (const auto& c : corpus.courses)
        for (const auto& t : c.threads) threads.push_back(&t);
    TermDictionary dict;
    const auto prepared = prepare_threads(threads, prep, dict);
    std::vector<const PreparedThread*> ptrs;
    for (const auto& p : prepared) ptrs.push_back(&p);

    ModelArtifact art;
    art.textprep = prep.config();
    art.featurizer = Featurizer::fit(ptrs, dict, FeatureFlags::all());
    art.params.weights.assign(art.featurizer.dimension(), 0.0);
    art.params.weights[1] = 0.5;
    art.params.weights.back() = -1.25;
    art.params.bias = 0.1;
    art.lambda = 2.0;
    art.class_weight = 4.0;
    art.seed = 9;

    const auto text = art.dump();
    const auto back = ModelArtifact::parse(text);
    CHECK(back.dump() == text);
    CHECK(back.params == art.params);
    for (const auto* t : threads)
        CHECK(back.featurizer.transform(*t, prep) == art.featurizer.transform(*t, prep));

    auto j = Json::parse(text);
    j["format_version"] = kArtifactFormatVersion + 1;
    CHECK_THROWS_AS(ModelArtifact::parse(j.dump()), ValidationError);
    j = Json::parse(text);
    j["dimension"] = 3;
    CHECK_THROWS_AS(ModelArtifact::parse(j.dump()), ValidationError);
    CHECK_THROWS_AS(ModelArtifact::parse("{"), ParseError);
}

}  // TEST_SUITE
