#pragma once

#include <array>
#include <filesystem>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "intervene/corpus.hpp"

namespace intervene {

/// One synthetic course.  Arrays are indexed in ForumType order.
struct CourseSpec {
    std::string id;
    std::size_t threads = 100;
    /// Relative share of threads per forum type (normalized on use).
    std::array<double, 4> forum_mix{0.25, 0.25, 0.25, 0.25};
    /// Probability that a thread of each forum type is intervened.
    std::array<double, 4> intervention_rate{0.3, 0.3, 0.3, 0.3};
};

/// Generated text.  Signal terms come in two halves: the first leans
/// toward intervened threads, the second toward the rest.
struct TextSpec {
    std::size_t background_terms = 600;
    std::size_t words_per_sentence_min = 3;
    std::size_t words_per_sentence_max = 6;
    std::size_t signal_terms = 20;
    /// Chance that a student item carries a signal term of its thread's class...
    double signal_rate = 0.15;
    /// ...and of the opposite class.
    double signal_noise = 0.08;
    double title_signal_rate = 0.1;
};

/// Thread shape and label-correlated metadata.  Pairs are
/// {non-intervened, intervened}; counts are Poisson means.
struct StructureSpec {
    std::array<double, 2> extra_posts{1.3, 1.9};
    std::array<double, 2> comments_per_post{0.5, 0.8};
    std::array<double, 2> extra_sentences{0.9, 1.3};
    std::array<double, 2> affirmation_rate{0.08, 0.18};
    std::array<double, 2> url_rate{0.06, 0.14};
    std::array<double, 2> timeref_rate{0.06, 0.14};
    double course_ref_rate = 0.12;
    double math_rate = 0.05;
    /// Chance the intervention is a comment on the last post rather than a post.
    double staff_comment_rate = 0.3;
    /// Student posts after the intervention (removed again by truncation).
    double followup_posts = 1.0;
};

struct CorpusSpec {
    std::vector<CourseSpec> courses;
    TextSpec text;
    StructureSpec structure;
    std::uint64_t seed = 42;
    /// "exact": each (course, forum type) cell gets round(rate * count)
    /// intervened threads at random positions.  "bernoulli": independent draws.
    std::string label_mode = "exact";

    void validate() const;
    static CorpusSpec parse(std::string_view json_text);
    static CorpusSpec load(const std::filesystem::path& path);
    std::string dump() const;
};

/// Deterministic corpus for the spec; each course uses its own sub-seed.
Corpus generate(const CorpusSpec& spec);

/// Forum-type log-odds offsets used by the default spec (errata, lecture,
/// homework, exam).
inline constexpr std::array<double, 4> kDefaultForumOffsets{1.6, 0.4, -1.0, 1.8};

/// Per-type rates sigmoid(base + offset_t) whose mix-weighted mean equals
/// `course_ratio`.
std::array<double, 4> rates_for_ratio(double course_ratio, const std::array<double, 4>& mix,
                                      const std::array<double, 4>& offsets = kDefaultForumOffsets);

/// Fourteen courses of 55 to 2058 threads (7408 in all) with intervention
/// ratios from 0.00 to 0.76 and a homework-heavy forum mix.
CorpusSpec default_d14_like_spec();

/// Same spec with every course's thread count scaled (minimum 10 threads).
CorpusSpec scaled(const CorpusSpec& spec, double factor);

}  // namespace intervene
