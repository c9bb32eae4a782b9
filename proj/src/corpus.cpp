#include "intervene/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace intervene {

using ojson = nlohmann::ordered_json;

std::string_view to_string(ForumType type) {
    switch (type) {
        case ForumType::Errata: return "errata";
        case ForumType::Lecture: return "lecture";
        case ForumType::Homework: return "homework";
        case ForumType::Exam: return "exam";
    }
    return "?";
}

ForumType parse_forum_type(std::string_view name) {
    for (auto type : kForumTypes)
        if (to_string(type) == name) return type;
    throw ValidationError("unknown forum_type \"" + std::string(name) + "\"");
}

std::string_view to_string(AuthorRole role) {
    return role == AuthorRole::Staff ? "staff" : "student";
}

AuthorRole parse_author_role(std::string_view name) {
    if (name == "student") return AuthorRole::Student;
    if (name == "staff") return AuthorRole::Staff;
    throw ValidationError("unknown role \"" + std::string(name) + "\"");
}

std::size_t Corpus::thread_count() const {
    std::size_t n = 0;
    for (const auto& c : courses) n += c.threads.size();
    return n;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
T required(const ojson& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(std::string("missing field \"") + key + "\"");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("field \"") + key + "\" has the wrong type");
    }
}

const ojson& required_array(const ojson& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(std::string("missing field \"") + key + "\"");
    if (!it->is_array()) throw ValidationError(std::string("field \"") + key + "\" must be an array");
    return *it;
}

Comment comment_from_json(const ojson& j) {
    Comment c;
    c.id = required<std::string>(j, "id");
    c.role = parse_author_role(required<std::string>(j, "role"));
    c.ts = required<Timestamp>(j, "ts");
    c.text = required<std::string>(j, "text");
    return c;
}

Post post_from_json(const ojson& j) {
    Post p;
    p.id = required<std::string>(j, "id");
    p.role = parse_author_role(required<std::string>(j, "role"));
    p.ts = required<Timestamp>(j, "ts");
    p.text = required<std::string>(j, "text");
    for (const auto& c : required_array(j, "comments")) p.comments.push_back(comment_from_json(c));
    return p;
}

Thread thread_from_json(const ojson& j) {
    if (!j.is_object()) throw ValidationError("record is not a JSON object");
    Thread t;
    t.course_id = required<std::string>(j, "course_id");
    t.id = required<std::string>(j, "thread_id");
    t.forum_type = parse_forum_type(required<std::string>(j, "forum_type"));
    t.title = required<std::string>(j, "title");
    for (const auto& p : required_array(j, "posts")) t.posts.push_back(post_from_json(p));
    return t;
}

ojson to_json(const Comment& c) {
    return ojson{{"id", c.id}, {"role", to_string(c.role)}, {"ts", c.ts}, {"text", c.text}};
}

ojson to_json(const Post& p) {
    ojson comments = ojson::array();
    for (const auto& c : p.comments) comments.push_back(to_json(c));
    return ojson{{"id", p.id},
                 {"role", to_string(p.role)},
                 {"ts", p.ts},
                 {"text", p.text},
                 {"comments", std::move(comments)}};
}

ojson to_json(const Thread& t) {
    ojson posts = ojson::array();
    for (const auto& p : t.posts) posts.push_back(to_json(p));
    return ojson{{"course_id", t.course_id},
                 {"thread_id", t.id},
                 {"forum_type", to_string(t.forum_type)},
                 {"title", t.title},
                 {"posts", std::move(posts)}};
}

void sort_by_time(Thread& t) {
    auto by_ts = [](const auto& a, const auto& b) { return a.ts < b.ts; };
    for (auto& p : t.posts) std::stable_sort(p.comments.begin(), p.comments.end(), by_ts);
    std::stable_sort(t.posts.begin(), t.posts.end(), by_ts);
}

}  // namespace

Corpus read_corpus(std::istream& in) {
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> course_index;
    std::string line;
    std::size_t lineno = 0;
    std::size_t records = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Thread thread;
        try {
            thread = thread_from_json(ojson::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        sort_by_time(thread);
        auto [it, inserted] = course_index.try_emplace(thread.course_id, corpus.courses.size());
        if (inserted) corpus.courses.push_back(Course{thread.course_id, {}});
        corpus.courses[it->second].threads.push_back(std::move(thread));
        ++records;
    }
    if (records == 0) throw ParseError("corpus is empty");
    validate(corpus);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file " + path.string());
    return read_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& course : corpus.courses)
        for (const auto& thread : course.threads) out << to_json(thread).dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write corpus file " + path.string());
    write_corpus(corpus, out);
}

void validate(const Corpus& corpus) {
    std::unordered_set<std::string> course_ids;
    for (const auto& course : corpus.courses) {
        if (!course_ids.insert(course.id).second)
            throw ValidationError("duplicate course id \"" + course.id + "\"");
        std::unordered_set<std::string> thread_ids;
        for (const auto& t : course.threads) {
            const auto where = "thread \"" + course.id + "/" + t.id + "\"";
            if (t.course_id != course.id) throw ValidationError(where + " carries a different course id");
            if (!thread_ids.insert(t.id).second) throw ValidationError("duplicate " + where);
            if (t.posts.empty()) throw ValidationError(where + " has no posts");
            for (std::size_t i = 1; i < t.posts.size(); ++i)
                if (t.posts[i].ts < t.posts[i - 1].ts) throw ValidationError(where + " posts out of order");
            for (const auto& p : t.posts)
                for (std::size_t i = 1; i < p.comments.size(); ++i)
                    if (p.comments[i].ts < p.comments[i - 1].ts)
                        throw ValidationError(where + " comments out of order");
        }
    }
}

// ---------------------------------------------------------------------------

bool label_thread(const Thread& thread) {
    return first_intervention(thread).has_value();
}

std::optional<Timestamp> first_intervention(const Thread& thread) {
    std::optional<Timestamp> first;
    auto consider = [&](AuthorRole role, Timestamp ts) {
        if (role == AuthorRole::Staff && (!first || ts < *first)) first = ts;
    };
    for (const auto& p : thread.posts) {
        consider(p.role, p.ts);
        for (const auto& c : p.comments) consider(c.role, c.ts);
    }
    return first;
}

Thread rewind(const Thread& thread, Timestamp cutoff) {
    Thread out;
    out.id = thread.id;
    out.course_id = thread.course_id;
    out.forum_type = thread.forum_type;
    out.title = thread.title;
    for (const auto& p : thread.posts) {
        if (p.ts > cutoff) continue;
        Post kept{p.id, p.role, p.ts, p.text, {}};
        for (const auto& c : p.comments)
            if (c.ts <= cutoff) kept.comments.push_back(c);
        out.posts.push_back(std::move(kept));
    }
    return out;
}

Truncation truncate_at_first_intervention(const Thread& thread) {
    const auto first = first_intervention(thread);
    if (!first) return {thread, false, false};
    // Integer timestamps: "strictly before tau" is "at or before tau - 1".
    Truncation result{rewind(thread, *first - 1), true, false};
    result.degenerate = result.thread.posts.empty();
    return result;
}

// ---------------------------------------------------------------------------

StatCell& StatCell::operator+=(const StatCell& other) {
    threads += other.threads;
    posts += other.posts;
    intervened_threads += other.intervened_threads;
    intervened_posts += other.intervened_posts;
    return *this;
}

CorpusStats compute_stats(const Corpus& corpus) {
    CorpusStats stats;
    for (const auto& course : corpus.courses) {
        CourseStats cs;
        cs.course_id = course.id;
        for (const auto& t : course.threads) {
            std::size_t items = t.posts.size();
            for (const auto& p : t.posts) items += p.comments.size();
            const bool intervened = label_thread(t);
            auto& cell = cs.by_type[static_cast<std::size_t>(t.forum_type)];
            cell.threads += 1;
            cell.posts += items;
            if (intervened) {
                cell.intervened_threads += 1;
                cell.intervened_posts += items;
            }
        }
        for (std::size_t k = 0; k < 4; ++k) {
            cs.total += cs.by_type[k];
            stats.by_type[k] += cs.by_type[k];
        }
        stats.total += cs.total;
        stats.courses.push_back(std::move(cs));
    }
    return stats;
}

double intervention_density(const Course& course) {
    if (course.threads.empty()) return 0.0;
    const auto positives = std::count_if(course.threads.begin(), course.threads.end(), label_thread);
    return static_cast<double>(positives) / static_cast<double>(course.threads.size());
}

Course oversample_to_density(const Course& course, double target_density, std::uint64_t seed) {
    if (!(target_density >= 0.0 && target_density < 1.0))
        throw std::invalid_argument("target density must lie in [0, 1)");
    std::vector<std::size_t> intervened;
    for (std::size_t i = 0; i < course.threads.size(); ++i)
        if (label_thread(course.threads[i])) intervened.push_back(i);

    const auto n = static_cast<double>(course.threads.size());
    const auto reaches = [&](std::size_t k) {
        return static_cast<double>(intervened.size() + k) >= target_density * (n + static_cast<double>(k));
    };
    if (reaches(0)) return course;
    if (intervened.empty())
        throw DomainError("course \"" + course.id + "\" has no intervened threads to oversample");

    // Smallest k with (i + k) / (n + k) >= target.
    auto k = static_cast<std::size_t>(std::max(
        0.0, std::ceil((target_density * n - static_cast<double>(intervened.size())) / (1.0 - target_density))));
    while (!reaches(k)) ++k;
    while (k > 0 && reaches(k - 1)) --k;

    Course out = course;
    Rng rng(seed);
    for (std::size_t d = 1; d <= k; ++d) {
        Thread copy = course.threads[intervened[rng.below(intervened.size())]];
        copy.id += "#dup" + std::to_string(d);
        out.threads.push_back(std::move(copy));
    }
    return out;
}

}  // namespace intervene
