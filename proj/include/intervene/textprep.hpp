#pragma once

#include <cstddef>
#include <filesystem>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "intervene/corpus.hpp"

namespace intervene {

inline constexpr std::string_view kUrlPlaceholder = "<URLREF>";
inline constexpr std::string_view kTimePlaceholder = "<TIMEREF>";
inline constexpr std::string_view kMathPlaceholder = "<MATH>";

/// Pattern and lexicon configuration.  Patterns are ECMAScript regular
/// expressions.  For canonicalization patterns, capture group 1 (when
/// present and matched) is kept in front of the placeholder.
struct TextprepConfig {
    int version = 1;
    std::vector<std::string> stopwords;
    std::vector<std::string> url_patterns;
    std::vector<std::string> time_patterns;
    std::vector<std::string> math_patterns;
    std::vector<std::string> affirmations;
    std::vector<std::string> course_ref_patterns;
    std::vector<std::string> abbreviations;

    /// The shipped configuration (config/textprep.json, compiled in).
    static TextprepConfig defaults();
    static TextprepConfig load(const std::filesystem::path& path);
    static TextprepConfig parse(std::string_view json_text);
    std::string dump() const;

    bool operator==(const TextprepConfig&) const = default;
};

struct CanonicalText {
    std::string text;
    std::size_t url_count = 0;
    std::size_t timeref_count = 0;
    std::size_t math_count = 0;
};

struct TokenStream {
    std::vector<std::string> tokens;
};

using StopwordSet = std::unordered_set<std::string>;

/// A compiled list of patterns; matches are counted without overlap per
/// pattern and summed.
class PatternSet {
public:
    PatternSet() = default;
    PatternSet(const std::vector<std::string>& patterns, bool ignore_case);

    std::size_t count(std::string_view text) const;
    bool any(std::string_view text) const;

private:
    std::vector<std::regex> patterns_;
};

// Free-standing building blocks.  TextProcessor bundles them with a config.

TokenStream tokenize(const CanonicalText& ct, const StopwordSet& stopwords);
std::vector<std::string> split_sentences(std::string_view text, const StopwordSet& abbreviations);
std::size_t count_course_refs(std::string_view text, const PatternSet& lexicon);

class TextProcessor {
public:
    explicit TextProcessor(TextprepConfig config = TextprepConfig::defaults());

    /// URLs first, then time references, then math.
    CanonicalText canonicalize(std::string_view text) const;
    TokenStream tokenize(const CanonicalText& ct) const;
    std::vector<std::string> split_sentences(std::string_view text) const;
    std::size_t count_course_refs(std::string_view text) const;
    bool is_affirmation(std::string_view text) const;

    /// Student replies (every item except the first post) matching the
    /// affirmation lexicon, at most one per item.
    std::size_t count_affirmations(const Thread& thread) const;

    const TextprepConfig& config() const { return config_; }

private:
    struct Rule {
        std::regex pattern;
        bool keeps_prefix = false;
    };
    static std::vector<Rule> compile_rules(const std::vector<std::string>& patterns);
    static std::size_t apply_rules(const std::vector<Rule>& rules, std::string_view placeholder, std::string& text);

    TextprepConfig config_;
    StopwordSet stopwords_;
    StopwordSet abbreviations_;
    std::vector<Rule> url_rules_;
    std::vector<Rule> time_rules_;
    std::vector<Rule> math_rules_;
    PatternSet affirmations_;
    PatternSet course_refs_;
};

}  // namespace intervene
