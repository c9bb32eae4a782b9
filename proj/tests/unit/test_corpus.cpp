#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "helpers.hpp"
#include "intervene/corpus.hpp"

using namespace testing;

namespace {

std::vector<Timestamp> timestamps(const Thread& t) {
    std::vector<Timestamp> out;
    for (const auto& p : t.posts) {
        out.push_back(p.ts);
        for (const auto& c : p.comments) out.push_back(c.ts);
    }
    return out;
}

/// Random thread with strictly increasing post times; comments fall between
/// their post and the next post.  Roles drawn at random.
Thread random_thread(Rng& rng, double staff_rate) {
    std::vector<Item> posts;
    Timestamp ts = 1;
    const auto n = 1 + rng.below(5);
    for (std::size_t p = 0; p < n; ++p) {
        Item post{rng.bernoulli(staff_rate) ? T : S, ts, "post " + std::to_string(p)};
        Timestamp cts = ts;
        const auto nc = rng.below(3);
        for (std::size_t c = 0; c < nc; ++c) {
            cts += 1 + static_cast<Timestamp>(rng.below(3));
            post.comments.push_back({rng.bernoulli(staff_rate) ? T : S, cts, "comment"});
        }
        posts.push_back(post);
        ts = cts + 1 + static_cast<Timestamp>(rng.below(4));
    }
    return make_thread("c", "t", ForumType::Lecture, "title", posts);
}

Course course_with(std::size_t threads, std::size_t intervened) {
    Course c{"course", {}};
    for (std::size_t i = 0; i < threads; ++i) {
        std::vector<Item> items{{S, 1, "question"}};
        if (i < intervened) items.push_back({T, 2, "answer"});
        c.threads.push_back(make_thread("course", "t" + std::to_string(i), ForumType::Homework, "q", items));
    }
    return c;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("reads two threads of one course") {
    std::istringstream in(
        R"({"course_id":"a","thread_id":"1","forum_type":"lecture","title":"x","posts":[{"id":"p0","role":"student","ts":1,"text":"hi","comments":[]}]})"
        "\n\n"
        R"({"course_id":"a","thread_id":"2","forum_type":"exam","title":"y","posts":[{"id":"p0","role":"staff","ts":3,"text":"ok","comments":[]}]})"
        "\n");
    const auto corpus = read_corpus(in);
    REQUIRE(corpus.courses.size() == 1);
    CHECK(corpus.courses[0].threads.size() == 2);
    CHECK(corpus.thread_count() == 2);
    CHECK(corpus.courses[0].threads[1].forum_type == ForumType::Exam);
}

TEST_CASE("unknown forum type names the value") {
    std::istringstream in(
        R"({"course_id":"a","thread_id":"1","forum_type":"project","title":"x","posts":[{"id":"p0","role":"student","ts":1,"text":"hi","comments":[]}]})");
    try {
        read_corpus(in);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("project") != std::string::npos);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("malformed line reports its line number") {
    std::istringstream in(
        R"({"course_id":"a","thread_id":"1","forum_type":"lecture","title":"x","posts":[{"id":"p0","role":"student","ts":1,"text":"hi","comments":[]}]})"
        "\n{not json\n");
    try {
        read_corpus(in);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("missing field and empty input are rejected") {
    std::istringstream missing(R"({"course_id":"a","thread_id":"1","forum_type":"lecture","posts":[]})");
    CHECK_THROWS_AS(read_corpus(missing), ValidationError);
    std::istringstream empty("\n\n");
    CHECK_THROWS_AS(read_corpus(empty), ParseError);
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), ParseError);
}

TEST_CASE("posts are sorted by time on load") {
    std::istringstream in(
        R"({"course_id":"a","thread_id":"1","forum_type":"lecture","title":"x","posts":[{"id":"late","role":"student","ts":9,"text":"b","comments":[]},{"id":"early","role":"student","ts":2,"text":"a","comments":[{"id":"c2","role":"student","ts":5,"text":""},{"id":"c1","role":"student","ts":3,"text":""}]}]})");
    const auto corpus = read_corpus(in);
    const auto& t = corpus.courses[0].threads[0];
    CHECK(t.posts[0].id == "early");
    CHECK(t.posts[0].comments[0].id == "c1");
}

TEST_CASE("duplicate thread ids are rejected") {
    Corpus c{{course_with(2, 0)}};
    c.courses[0].threads[1].id = "t0";
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("save then load is the identity") {
    Rng rng(7);
    Corpus corpus;
    for (int c = 0; c < 3; ++c) {
        Course course{"course" + std::to_string(c), {}};
        for (int i = 0; i < 5; ++i) {
            auto t = random_thread(rng, 0.2);
            t.course_id = course.id;
            t.id = "t" + std::to_string(i);
            t.forum_type = kForumTypes[rng.below(4)];
            t.title = "Title with \"quotes\" and unicode \xc3\xa9";
            course.threads.push_back(t);
        }
        corpus.courses.push_back(course);
    }
    const auto path = std::filesystem::temp_directory_path() / "intervene_roundtrip.jsonl";
    save_corpus(corpus, path);
    CHECK(load_corpus(path) == corpus);
    std::filesystem::remove(path);
}

TEST_CASE("labeling") {
    CHECK_FALSE(label_thread(make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a"}, {S, 2, "b"}})));
    CHECK(label_thread(make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a"}, {S, 2, "b", {{T, 3, "c"}}}})));
    CHECK(label_thread(make_thread("c", "t", ForumType::Lecture, "", {{T, 1, "a"}})));
}

TEST_CASE("truncation keeps only what precedes the first staff item") {
    SUBCASE("staff post in the middle") {
        const auto t = make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a"}, {T, 2, "b"}, {S, 3, "c"}});
        const auto r = truncate_at_first_intervention(t);
        CHECK(r.intervened);
        CHECK_FALSE(r.degenerate);
        REQUIRE(r.thread.posts.size() == 1);
        CHECK(r.thread.posts[0].ts == 1);
    }
    SUBCASE("no staff content") {
        const auto t = make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a"}, {S, 2, "b", {{S, 3, "c"}}}});
        const auto r = truncate_at_first_intervention(t);
        CHECK_FALSE(r.intervened);
        CHECK(r.thread == t);
    }
    SUBCASE("staff comment on the first post") {
        const auto t = make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a", {{T, 4, "fix"}}}, {S, 5, "b"}});
        const auto r = truncate_at_first_intervention(t);
        REQUIRE(r.thread.posts.size() == 1);
        CHECK(r.thread.posts[0].ts == 1);
        CHECK(r.thread.posts[0].comments.empty());
    }
    SUBCASE("student item sharing the staff timestamp goes too") {
        const auto t = make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a", {{S, 4, "same"}}}, {T, 4, "b"}});
        const auto r = truncate_at_first_intervention(t);
        CHECK(r.thread.posts[0].comments.empty());
    }
    SUBCASE("staff first is degenerate") {
        const auto t = make_thread("c", "t", ForumType::Lecture, "", {{T, 1, "a"}, {S, 2, "b"}});
        const auto r = truncate_at_first_intervention(t);
        CHECK(r.degenerate);
        CHECK(r.thread.posts.empty());
    }
}

TEST_CASE("truncation properties on random threads") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const auto t = random_thread(rng, 0.25);
        const auto r = truncate_at_first_intervention(t);
        CHECK_FALSE(label_thread(r.thread));
        CHECK(r.intervened == label_thread(t));
        if (const auto tau = first_intervention(t))
            for (auto ts : timestamps(r.thread)) CHECK(ts < *tau);
        else
            CHECK(r.thread == t);
    }
}

TEST_CASE("rewind") {
    const auto t = make_thread("c", "t", ForumType::Lecture, "", {{S, 1, "a"}, {S, 5, "b"}, {S, 9, "c"}});
    CHECK(rewind(t, 6).posts.size() == 2);
    CHECK(rewind(t, 0).posts.empty());
    CHECK(rewind(t, 9) == t);

    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const auto r = random_thread(rng, 0.3);
        CHECK(rewind(r, std::numeric_limits<Timestamp>::max()) == r);
        const auto a = static_cast<Timestamp>(rng.below(30));
        const auto b = static_cast<Timestamp>(rng.below(30));
        CHECK(rewind(rewind(r, a), b) == rewind(r, std::min(a, b)));
        for (auto ts : timestamps(rewind(r, a))) CHECK(ts <= a);
    }
}

TEST_CASE("statistics") {
    SUBCASE("totals are column sums") {
        Rng rng(5);
        Corpus corpus;
        for (int c = 0; c < 4; ++c) {
            Course course{"c" + std::to_string(c), {}};
            for (int i = 0; i < 20; ++i) {
                auto t = random_thread(rng, 0.15);
                t.course_id = course.id;
                t.id = std::to_string(i);
                t.forum_type = kForumTypes[rng.below(4)];
                course.threads.push_back(t);
            }
            corpus.courses.push_back(course);
        }
        const auto s = compute_stats(corpus);
        StatCell sum, by_type_sum;
        for (const auto& c : s.courses) sum += c.total;
        for (const auto& c : s.by_type) by_type_sum += c;
        CHECK(sum == s.total);
        CHECK(by_type_sum == s.total);
        CHECK(s.total.threads == 80);
        for (const auto& c : s.courses) {
            CHECK(c.total.intervened_threads <= c.total.threads);
            CHECK(c.total.intervened_posts <= c.total.posts);
        }
    }
    SUBCASE("reference totals give ratio 0.3958") {
        StatCell cell{7408, 0, 2932, 0};
        CHECK(cell.ratio() == doctest::Approx(0.3958).epsilon(0.0001 / 0.3958));
    }
    SUBCASE("no interventions and a single intervened thread") {
        CHECK(compute_stats(Corpus{{course_with(3, 0)}}).total.ratio() == 0.0);
        CHECK(compute_stats(Corpus{{course_with(1, 1)}}).total.ratio() == 1.0);
    }
    SUBCASE("posts count every item") {
        const auto t = make_thread("c", "t", ForumType::Exam, "", {{S, 1, "a", {{S, 2, "b"}}}, {T, 3, "c"}});
        const auto s = compute_stats(Corpus{{Course{"c", {t}}}});
        CHECK(s.total.posts == 3);
        CHECK(s.by_type[3].intervened_posts == 3);
    }
}

TEST_CASE("oversampling") {
    SUBCASE("2 of 10 to density 0.4 needs 4 copies") {
        const auto out = oversample_to_density(course_with(10, 2), 0.4, 1);
        CHECK(out.threads.size() == 14);
        CHECK(intervention_density(out) == doctest::Approx(6.0 / 14.0));
        for (std::size_t i = 10; i < 14; ++i) CHECK(out.threads[i].id.find("#dup") != std::string::npos);
    }
    SUBCASE("already dense enough") {
        const auto c = course_with(10, 5);
        CHECK(oversample_to_density(c, 0.4, 1) == c);
    }
    SUBCASE("deterministic and minimal") {
        Rng rng(9);
        for (int trial = 0; trial < 100; ++trial) {
            const auto n = 2 + rng.below(30);
            const auto k = 1 + rng.below(n - 1);
            const double target = 0.05 + 0.9 * rng.uniform();
            const auto c = course_with(n, k);
            const auto a = oversample_to_density(c, target, trial);
            CHECK(a == oversample_to_density(c, target, trial));
            CHECK(intervention_density(a) >= target);
            CHECK(std::equal(c.threads.begin(), c.threads.end(), a.threads.begin()));
            const auto added = a.threads.size() - n;
            if (added > 0) {
                const double before = static_cast<double>(k + added - 1) / static_cast<double>(n + added - 1);
                CHECK(before < target);
            }
        }
    }
    SUBCASE("unreachable target") {
        CHECK_THROWS_AS(oversample_to_density(course_with(5, 0), 0.3, 1), DomainError);
        CHECK_THROWS_AS(oversample_to_density(course_with(5, 1), 1.0, 1), std::invalid_argument);
    }
}

}  // TEST_SUITE
