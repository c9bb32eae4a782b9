#include "intervene/textprep.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace intervene {

namespace detail {
std::string_view default_textprep_json();
}

using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::string> string_list(const ojson& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("textprep config: missing key \"") + key + "\"");
    try {
        return it->get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("textprep config: \"") + key + "\" must be an array of strings");
    }
}

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::regex compile(const std::string& pattern, bool ignore_case) {
    auto flags = std::regex::ECMAScript | std::regex::optimize;
    if (ignore_case) flags |= std::regex::icase;
    try {
        return std::regex(pattern, flags);
    } catch (const std::regex_error& e) {
        throw ValidationError("invalid pattern \"" + pattern + "\": " + e.what());
    }
}

}  // namespace

// ---------------------------------------------------------------------------

TextprepConfig TextprepConfig::parse(std::string_view json_text) {
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("textprep config: ") + e.what());
    }
    TextprepConfig cfg;
    cfg.version = j.value("version", 1);
    cfg.stopwords = string_list(j, "stopwords");
    cfg.url_patterns = string_list(j, "url_patterns");
    cfg.time_patterns = string_list(j, "time_patterns");
    cfg.math_patterns = string_list(j, "math_patterns");
    cfg.affirmations = string_list(j, "affirmations");
    cfg.course_ref_patterns = string_list(j, "course_ref_patterns");
    cfg.abbreviations = string_list(j, "abbreviations");
    return cfg;
}

TextprepConfig TextprepConfig::defaults() {
    static const TextprepConfig cfg = parse(detail::default_textprep_json());
    return cfg;
}

TextprepConfig TextprepConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open textprep config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string TextprepConfig::dump() const {
    ojson j{{"version", version},
            {"stopwords", stopwords},
            {"url_patterns", url_patterns},
            {"time_patterns", time_patterns},
            {"math_patterns", math_patterns},
            {"affirmations", affirmations},
            {"course_ref_patterns", course_ref_patterns},
            {"abbreviations", abbreviations}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------

PatternSet::PatternSet(const std::vector<std::string>& patterns, bool ignore_case) {
    patterns_.reserve(patterns.size());
    for (const auto& p : patterns) patterns_.push_back(compile(p, ignore_case));
}

std::size_t PatternSet::count(std::string_view text) const {
    std::size_t n = 0;
    for (const auto& re : patterns_)
        n += static_cast<std::size_t>(
            std::distance(std::cregex_iterator(text.data(), text.data() + text.size(), re), std::cregex_iterator()));
    return n;
}

bool PatternSet::any(std::string_view text) const {
    for (const auto& re : patterns_)
        if (std::regex_search(text.data(), text.data() + text.size(), re)) return true;
    return false;
}

TokenStream tokenize(const CanonicalText& ct, const StopwordSet& stopwords) {
    static constexpr std::string_view placeholders[] = {kUrlPlaceholder, kTimePlaceholder, kMathPlaceholder};
    TokenStream out;
    const std::string_view text = ct.text;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '<') {
            bool matched = false;
            for (auto ph : placeholders) {
                if (text.substr(i, ph.size()) == ph) {
                    out.tokens.emplace_back(ph);
                    i += ph.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
        auto token = lower(text.substr(i, j - i));
        if (!stopwords.contains(token)) out.tokens.push_back(std::move(token));
        i = j;
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view text, const StopwordSet& abbreviations) {
    std::vector<std::string> sentences;
    auto flush = [&](std::size_t begin, std::size_t end) {
        while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
        while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
        if (end > begin) sentences.emplace_back(text.substr(begin, end - begin));
    };
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && (text[end] == '.' || text[end] == '!' || text[end] == '?')) ++end;
        const bool boundary = end == text.size() || std::isspace(static_cast<unsigned char>(text[end]));
        if (boundary && c == '.' && end == i + 1) {
            std::size_t w = i;
            while (w > start && !std::isspace(static_cast<unsigned char>(text[w - 1]))) --w;
            if (abbreviations.contains(lower(text.substr(w, end - w)))) {
                i = end;
                continue;
            }
        }
        if (boundary) {
            flush(start, end);
            start = end;
        }
        i = end;
    }
    flush(start, text.size());
    return sentences;
}

std::size_t count_course_refs(std::string_view text, const PatternSet& lexicon) {
    return lexicon.count(text);
}

// ---------------------------------------------------------------------------

TextProcessor::TextProcessor(TextprepConfig config)
    : config_(std::move(config)),
      stopwords_(config_.stopwords.begin(), config_.stopwords.end()),
      url_rules_(compile_rules(config_.url_patterns)),
      time_rules_(compile_rules(config_.time_patterns)),
      math_rules_(compile_rules(config_.math_patterns)),
      affirmations_(config_.affirmations, true),
      course_refs_(config_.course_ref_patterns, true) {
    for (const auto& a : config_.abbreviations) abbreviations_.insert(lower(a));
}

std::vector<TextProcessor::Rule> TextProcessor::compile_rules(const std::vector<std::string>& patterns) {
    std::vector<Rule> rules;
    for (const auto& p : patterns) {
        Rule r{compile(p, true), false};
        r.keeps_prefix = r.pattern.mark_count() >= 1;
        rules.push_back(std::move(r));
    }
    return rules;
}

std::size_t TextProcessor::apply_rules(const std::vector<Rule>& rules, std::string_view placeholder,
                                       std::string& text) {
    std::size_t total = 0;
    for (const auto& rule : rules) {
        std::string out;
        std::size_t last = 0;
        std::size_t hits = 0;
        for (std::sregex_iterator it(text.begin(), text.end(), rule.pattern), end; it != end; ++it) {
            const auto& m = *it;
            if (m.length(0) == 0) continue;
            out.append(text, last, static_cast<std::size_t>(m.position(0)) - last);
            if (rule.keeps_prefix && m[1].matched) out += m.str(1);
            out += placeholder;
            last = static_cast<std::size_t>(m.position(0) + m.length(0));
            ++hits;
        }
        if (hits) {
            out.append(text, last, std::string::npos);
            text = std::move(out);
            total += hits;
        }
    }
    return total;
}

CanonicalText TextProcessor::canonicalize(std::string_view text) const {
    CanonicalText ct{std::string(text), 0, 0, 0};
    ct.url_count = apply_rules(url_rules_, kUrlPlaceholder, ct.text);
    ct.timeref_count = apply_rules(time_rules_, kTimePlaceholder, ct.text);
    ct.math_count = apply_rules(math_rules_, kMathPlaceholder, ct.text);
    return ct;
}

TokenStream TextProcessor::tokenize(const CanonicalText& ct) const {
    return intervene::tokenize(ct, stopwords_);
}

std::vector<std::string> TextProcessor::split_sentences(std::string_view text) const {
    return intervene::split_sentences(text, abbreviations_);
}

std::size_t TextProcessor::count_course_refs(std::string_view text) const {
    return course_refs_.count(text);
}

bool TextProcessor::is_affirmation(std::string_view text) const {
    return affirmations_.any(text);
}

std::size_t TextProcessor::count_affirmations(const Thread& thread) const {
    std::size_t n = 0;
    auto consider = [&](AuthorRole role, const std::string& text) {
        if (role == AuthorRole::Student && is_affirmation(canonicalize(text).text)) ++n;
    };
    for (std::size_t i = 0; i < thread.posts.size(); ++i) {
        const auto& p = thread.posts[i];
        if (i > 0) consider(p.role, p.text);
        for (const auto& c : p.comments) consider(c.role, c.text);
    }
    return n;
}

}  // namespace intervene
