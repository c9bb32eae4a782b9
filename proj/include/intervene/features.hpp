#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "intervene/corpus.hpp"
#include "intervene/textprep.hpp"

namespace intervene {

// ---------------------------------------------------------------------------
// Feature groups

enum class FeatureGroup : std::uint8_t {
    Unigrams,
    ForumType,
    CourseRef,
    Affirmation,
    ThreadProps,
    NumSents,
    NonlexRef,
};

inline constexpr std::array<FeatureGroup, 7> kFeatureGroups{
    FeatureGroup::Unigrams,    FeatureGroup::ForumType, FeatureGroup::CourseRef, FeatureGroup::Affirmation,
    FeatureGroup::ThreadProps, FeatureGroup::NumSents,  FeatureGroup::NonlexRef};

std::string_view to_string(FeatureGroup group);

/// Set of enabled feature groups.  Text form is a comma-separated list of
/// group names (unigrams, forum_type, course_ref, affirmation, thread_props,
/// num_sents, nonlex_ref) or "all".
class FeatureFlags {
public:
    constexpr FeatureFlags() = default;

    static FeatureFlags all();
    static FeatureFlags parse(std::string_view csv);

    bool has(FeatureGroup g) const { return bits_ & bit(g); }
    bool empty() const { return bits_ == 0; }
    std::size_t count() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    FeatureFlags with(FeatureGroup g) const { return FeatureFlags(static_cast<std::uint8_t>(bits_ | bit(g))); }
    FeatureFlags without(FeatureGroup g) const { return FeatureFlags(static_cast<std::uint8_t>(bits_ & ~bit(g))); }
    std::string to_string() const;

    bool operator==(const FeatureFlags&) const = default;

private:
    explicit constexpr FeatureFlags(std::uint8_t bits) : bits_(bits) {}
    static constexpr std::uint8_t bit(FeatureGroup g) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(g)); }
    std::uint8_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Metadata features

struct MetaFeatures {
    static constexpr std::size_t kCount = 9;

    std::size_t course_refs = 0;
    std::size_t affirmations = 0;
    std::size_t n_posts = 0;
    std::size_t n_comments = 0;
    std::size_t n_items = 0;
    double avg_comments_per_post = 0.0;
    std::size_t n_sentences = 0;
    std::size_t n_urls = 0;
    std::size_t n_timerefs = 0;

    /// Fixed order: the fields above, top to bottom.
    std::array<double, kCount> values() const;
    static const std::array<std::string_view, kCount>& names();

    bool operator==(const MetaFeatures&) const = default;
};

/// Tokens of the whole thread (title, posts, comments) plus its metadata
/// counts, computed in one canonicalization pass.
struct ThreadText {
    std::vector<std::string> tokens;
    MetaFeatures meta;
};

ThreadText analyze_thread(const Thread& thread, const TextProcessor& prep);
MetaFeatures extract_meta(const Thread& thread, const TextProcessor& prep);

class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(std::array<double, MetaFeatures::kCount> min, std::array<double, MetaFeatures::kCount> max);

    static MinMaxScaler fit(std::span<const MetaFeatures> training);

    /// (x - min) / (max - min) clamped to [0, 1]; constant features map to 0.
    std::array<double, MetaFeatures::kCount> apply(const MetaFeatures& meta) const;

    const std::array<double, MetaFeatures::kCount>& min() const { return min_; }
    const std::array<double, MetaFeatures::kCount>& max() const { return max_; }

private:
    std::array<double, MetaFeatures::kCount> min_{};
    std::array<double, MetaFeatures::kCount> max_{};
};

// ---------------------------------------------------------------------------
// Terms

struct SparseVector {
    std::size_t dim = 0;
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    std::size_t nnz() const { return index.size(); }
    double norm() const;
    bool operator==(const SparseVector&) const = default;
};

/// Interning table of every term seen while preparing a corpus.  Ids follow
/// byte-wise term order, so any subset taken in id order is sorted too.
class TermDictionary {
public:
    TermDictionary() = default;
    explicit TermDictionary(std::vector<std::string> terms);

    std::size_t size() const { return terms_.size(); }
    const std::string& term(std::uint32_t id) const { return terms_[id]; }
    std::optional<std::uint32_t> find(std::string_view term) const;

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

/// A thread reduced to what the feature encoder needs.
struct PreparedThread {
    ForumType forum_type = ForumType::Lecture;
    /// (dictionary id, term frequency), ascending by id.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> term_counts;
    MetaFeatures meta;
};

/// Analyzes every thread and interns its terms into one shared dictionary.
std::vector<PreparedThread> prepare_threads(std::span<const Thread* const> threads, const TextProcessor& prep,
                                            TermDictionary& dictionary);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> thread_df, std::size_t total_threads);

    /// Vocabulary over the training threads.  Indices follow sorted term order.
    static Vocabulary build(std::span<const Thread> threads, const TextProcessor& prep, std::size_t df_min = 1);
    static Vocabulary build(std::span<const PreparedThread* const> threads, const TermDictionary& dictionary,
                            std::size_t df_min = 1);

    std::size_t size() const { return terms_.size(); }
    std::size_t total_threads() const { return total_threads_; }
    const std::string& term(std::size_t index) const { return terms_[index]; }
    std::uint32_t thread_df(std::size_t index) const { return df_[index]; }
    std::optional<std::uint32_t> index_of(std::string_view term) const;

    /// Maps a prepared thread's dictionary ids onto vocabulary indices,
    /// dropping out-of-vocabulary terms.  Output is ascending by index.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> map_counts(
        const PreparedThread& thread, const TermDictionary& dictionary) const;

    const std::vector<std::string>& terms() const { return terms_; }
    const std::vector<std::uint32_t>& thread_dfs() const { return df_; }

private:
    void index_terms();

    std::vector<std::string> terms_;
    std::vector<std::uint32_t> df_;
    std::size_t total_threads_ = 0;
    std::unordered_map<std::string, std::uint32_t> index_;
    // Fast path for the dictionary the vocabulary was built from.
    const TermDictionary* source_ = nullptr;
    std::vector<std::int32_t> from_source_;
};

/// tf x ln(total_threads / thread_df) for (vocabulary index, tf) pairs
/// ascending by index, L2-normalized.  Zero weights are dropped.
SparseVector tf_itf_weights(std::span<const std::pair<std::uint32_t, std::uint32_t>> counts,
                            const Vocabulary& vocab);

SparseVector tf_itf_vector(const Thread& thread, const Vocabulary& vocab, const TextProcessor& prep);

// ---------------------------------------------------------------------------
// Assembly

struct FeatureVector {
    SparseVector terms;
    /// Errata, lecture, homework, exam; empty when the group is disabled.
    std::vector<double> forum_bits;
    std::vector<double> dense;

    std::size_t dimension() const { return terms.dim + forum_bits.size() + dense.size(); }
    /// Concatenation of the three parts in that order.
    SparseVector flatten() const;
};

/// Indices into MetaFeatures::values() contributed by each enabled group.
std::vector<std::size_t> dense_columns(FeatureFlags flags);

FeatureVector assemble(const Thread& thread, const Vocabulary& vocab, const MinMaxScaler& scaler,
                       FeatureFlags flags, const TextProcessor& prep);
FeatureVector assemble(const PreparedThread& thread, const TermDictionary& dictionary, const Vocabulary& vocab,
                       const MinMaxScaler& scaler, FeatureFlags flags);

/// Vocabulary, scaler and flags fitted together on one training set.
class Featurizer {
public:
    Featurizer() = default;
    Featurizer(FeatureFlags flags, Vocabulary vocab, MinMaxScaler scaler);

    static Featurizer fit(std::span<const PreparedThread* const> training, const TermDictionary& dictionary,
                          FeatureFlags flags, std::size_t df_min = 1);

    std::size_t dimension() const;
    SparseVector transform(const PreparedThread& thread, const TermDictionary& dictionary) const;
    SparseVector transform(const Thread& thread, const TextProcessor& prep) const;
    /// Human-readable name of a flattened dimension ("term:gradient", "forum:exam", "meta:n_posts").
    std::string dimension_name(std::size_t index) const;

    FeatureFlags flags() const { return flags_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const MinMaxScaler& scaler() const { return scaler_; }

private:
    FeatureFlags flags_;
    Vocabulary vocab_;
    MinMaxScaler scaler_;
};

}  // namespace intervene
