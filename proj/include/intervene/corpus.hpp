#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intervene/common.hpp"

namespace intervene {

/// Subforum category.  The declared order is the bit order used by the
/// feature encoder and the row order of the statistics tables.
enum class ForumType : std::uint8_t { Errata, Lecture, Homework, Exam };

inline constexpr std::array<ForumType, 4> kForumTypes{ForumType::Errata, ForumType::Lecture,
                                                      ForumType::Homework, ForumType::Exam};

std::string_view to_string(ForumType type);
/// Accepts the exact lowercase names only; anything else is a ValidationError.
ForumType parse_forum_type(std::string_view name);

/// Staff covers instructors, TAs, community TAs and technical staff.
enum class AuthorRole : std::uint8_t { Student, Staff };

std::string_view to_string(AuthorRole role);
AuthorRole parse_author_role(std::string_view name);

using Timestamp = std::int64_t;

struct Comment {
    std::string id;
    AuthorRole role = AuthorRole::Student;
    Timestamp ts = 0;
    std::string text;

    bool operator==(const Comment&) const = default;
};

struct Post {
    std::string id;
    AuthorRole role = AuthorRole::Student;
    Timestamp ts = 0;
    std::string text;
    std::vector<Comment> comments;

    bool operator==(const Post&) const = default;
};

struct Thread {
    std::string id;
    std::string course_id;
    ForumType forum_type = ForumType::Lecture;
    std::string title;
    std::vector<Post> posts;

    bool operator==(const Thread&) const = default;
};

struct Course {
    std::string id;
    std::vector<Thread> threads;

    bool operator==(const Course&) const = default;
};

struct Corpus {
    std::vector<Course> courses;

    std::size_t thread_count() const;
    bool operator==(const Corpus&) const = default;
};

// ---------------------------------------------------------------------------
// Ingestion

/// Reads the JSON Lines corpus format.  Courses appear in order of first
/// occurrence; posts and comments are stably sorted by timestamp.
Corpus load_corpus(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

/// Enforces the structural invariants: unique course ids, unique thread ids
/// within a course, matching course ids, at least one post per thread,
/// timestamp ordering.
void validate(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Labeling and time travel

/// True iff any post or comment is Staff-authored.
bool label_thread(const Thread& thread);

/// Earliest Staff timestamp over posts and comments.
std::optional<Timestamp> first_intervention(const Thread& thread);

/// Copy keeping exactly the posts and comments stamped at or before `cutoff`.
/// A post that is dropped takes its comments with it.
Thread rewind(const Thread& thread, Timestamp cutoff);

struct Truncation {
    Thread thread;
    bool intervened = false;
    /// Nothing observable precedes the first Staff item.
    bool degenerate = false;
};

/// Removes the first Staff item and everything stamped at or after it.
/// Student content sharing the Staff timestamp is removed as well.
Truncation truncate_at_first_intervention(const Thread& thread);

// ---------------------------------------------------------------------------
// Statistics

struct StatCell {
    std::size_t threads = 0;
    /// Posts plus comments.
    std::size_t posts = 0;
    std::size_t intervened_threads = 0;
    std::size_t intervened_posts = 0;

    double ratio() const {
        return threads ? static_cast<double>(intervened_threads) / static_cast<double>(threads) : 0.0;
    }
    StatCell& operator+=(const StatCell& other);
    bool operator==(const StatCell&) const = default;
};

struct CourseStats {
    std::string course_id;
    std::array<StatCell, 4> by_type{};
    StatCell total;
    bool operator==(const CourseStats&) const = default;
};

struct CorpusStats {
    std::vector<CourseStats> courses;
    std::array<StatCell, 4> by_type{};
    StatCell total;
    bool operator==(const CorpusStats&) const = default;
};

CorpusStats compute_stats(const Corpus& corpus);

/// Fraction of threads in the course that carry an intervention.
double intervention_density(const Course& course);

/// Appends copies of uniformly chosen intervened threads (ids suffixed
/// "#dupN") until the intervention density reaches `target_density`, adding
/// the fewest copies that do so.  Courses already at or above target are
/// returned unchanged.
Course oversample_to_density(const Course& course, double target_density, std::uint64_t seed);

}  // namespace intervene
