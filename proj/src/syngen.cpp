#include "intervene/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace intervene {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 20> kSignalWords{
    // lean toward intervened threads
    "confused", "error", "wrong", "broken", "deadline", "grading", "mistake", "typo", "incorrect", "missing",
    // lean toward the rest
    "interesting", "enjoyed", "sharing", "idea", "resource", "discussion", "opinion", "cool", "nice", "fun"};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

/// Three-syllable pseudo-word for a background term index.
std::string pseudo_word(std::size_t i) {
    const std::size_t base = kConsonants.size() * kVowels.size();
    std::string w;
    for (int s = 0; s < 3; ++s) {
        const std::size_t syl = i % base;
        i /= base;
        w += kConsonants[syl / kVowels.size()];
        w += kVowels[syl % kVowels.size()];
    }
    return w;
}

void check_probability(double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(what + " must lie in [0, 1]");
}

void check_mean(double m, const std::string& what) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError(what + " must be a finite mean >= 0");
}

/// Words and phrase templates shared by all courses of one spec.
class TextBank {
public:
    explicit TextBank(const TextSpec& spec) : spec_(spec) {
        for (std::size_t i = 0; i < spec.background_terms; ++i) background_.push_back(pseudo_word(i));
        for (std::size_t i = 0; i < spec.signal_terms; ++i)
            signal_.push_back(i < kSignalWords.size() ? std::string(kSignalWords[i]) : "signal" + std::to_string(i));
        // Zipf-like popularity over background terms.
        double acc = 0.0;
        for (std::size_t r = 0; r < background_.size(); ++r) {
            acc += 1.0 / static_cast<double>(r + 1);
            cdf_.push_back(acc);
        }
        for (auto& c : cdf_) c /= acc;
    }

    const std::string& background(Rng& rng) const {
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), rng.uniform());
        return background_[std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), background_.size() - 1)];
    }

    /// A signal word leaning toward `intervened` (or away from it).
    const std::string& signal(Rng& rng, bool intervened) const {
        const std::size_t half = signal_.size() / 2;
        if (intervened) return signal_[rng.below(half)];
        return signal_[half + rng.below(signal_.size() - half)];
    }

    bool has_signal() const { return signal_.size() >= 2; }

    std::string sentence(Rng& rng, const std::string* extra) const {
        const auto n = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec_.words_per_sentence_min),
                                                            static_cast<std::int64_t>(spec_.words_per_sentence_max)));
        std::vector<std::string> words;
        for (std::size_t k = 0; k < n; ++k) words.push_back(background(rng));
        if (extra) words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), *extra);
        std::string s;
        for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
        s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s + (rng.bernoulli(0.2) ? "?" : ".");
    }

private:
    const TextSpec& spec_;
    std::vector<std::string> background_;
    std::vector<std::string> signal_;
    std::vector<double> cdf_;
};

class ThreadWriter {
public:
    ThreadWriter(const CorpusSpec& spec, const TextBank& bank, Rng& rng) : spec_(spec), bank_(bank), rng_(rng) {}

    Thread write(const std::string& course_id, std::size_t index, ForumType type, bool intervened, Timestamp start) {
        const auto& st = spec_.structure;
        const std::size_t cls = intervened ? 1 : 0;
        Thread t;
        t.course_id = course_id;
        t.id = "t" + std::to_string(index);
        t.forum_type = type;
        ts_ = start;

        const std::string* title_signal = nullptr;
        if (bank_.has_signal() && rng_.bernoulli(spec_.text.title_signal_rate))
            title_signal = &bank_.signal(rng_, intervened);
        t.title = bank_.sentence(rng_, title_signal);
        t.title.pop_back();

        const std::size_t posts = 1 + rng_.poisson(st.extra_posts[cls]);
        for (std::size_t p = 0; p < posts; ++p) {
            Post post{"p" + std::to_string(p), AuthorRole::Student, tick(), student_text(intervened, p > 0), {}};
            const std::size_t comments = rng_.poisson(st.comments_per_post[cls]);
            for (std::size_t c = 0; c < comments; ++c)
                post.comments.push_back({"c" + std::to_string(p) + "_" + std::to_string(c), AuthorRole::Student,
                                         tick(), student_text(intervened, true)});
            t.posts.push_back(std::move(post));
        }
        if (!intervened) return t;

        const std::string staff = "Thanks for raising this. The staff team has looked into it and updated the notes.";
        if (rng_.bernoulli(st.staff_comment_rate)) {
            auto& last = t.posts.back();
            last.comments.push_back({"c" + std::to_string(posts - 1) + "_staff", AuthorRole::Staff, tick(), staff});
        } else {
            t.posts.push_back({"p" + std::to_string(posts), AuthorRole::Staff, tick(), staff, {}});
        }
        const std::size_t followups = rng_.poisson(st.followup_posts);
        for (std::size_t f = 0; f < followups; ++f)
            t.posts.push_back({"p" + std::to_string(t.posts.size()), AuthorRole::Student, tick(),
                               "Thanks, that helps! Resolved for me now.", {}});
        return t;
    }

private:
    Timestamp tick() {
        ts_ += rng_.between(30, 900);
        return ts_;
    }

    std::string student_text(bool intervened, bool reply) {
        const auto& st = spec_.structure;
        const auto& tx = spec_.text;
        const std::size_t cls = intervened ? 1 : 0;
        std::vector<std::string> sentences;
        const std::size_t n = 1 + rng_.poisson(st.extra_sentences[cls]);

        const std::string* aligned = nullptr;
        const std::string* opposite = nullptr;
        if (bank_.has_signal()) {
            if (rng_.bernoulli(tx.signal_rate)) aligned = &bank_.signal(rng_, intervened);
            if (rng_.bernoulli(tx.signal_noise)) opposite = &bank_.signal(rng_, !intervened);
        }
        const std::size_t aligned_at = rng_.below(n), opposite_at = rng_.below(n);
        for (std::size_t s = 0; s < n; ++s) {
            sentences.push_back(bank_.sentence(rng_, s == aligned_at ? aligned : nullptr));
            if (s == opposite_at && opposite) sentences.push_back(bank_.sentence(rng_, opposite));
        }

        if (reply && rng_.bernoulli(st.affirmation_rate[cls])) {
            static constexpr std::array<std::string_view, 4> kAffirm{"I agree.", "+1", "Same here.", "Me too."};
            sentences.insert(sentences.begin(), std::string(kAffirm[rng_.below(kAffirm.size())]));
        }
        if (rng_.bernoulli(st.url_rate[cls]))
            sentences.push_back("See https://notes.example.org/page" + std::to_string(rng_.below(90) + 10) +
                                " for the details.");
        if (rng_.bernoulli(st.timeref_rate[cls]))
            sentences.push_back("The part at " + std::to_string(rng_.below(20) + 1) + ":" +
                                std::to_string(rng_.below(50) + 10) + " in the video.");
        if (rng_.bernoulli(st.course_ref_rate)) {
            static constexpr std::array<std::string_view, 4> kRefs{"As shown on slide ", "In lecture video ",
                                                                   "Compare quiz ", "Also chapter "};
            sentences.push_back(std::string(kRefs[rng_.below(kRefs.size())]) + std::to_string(rng_.below(12) + 1) +
                                ".");
        }
        if (rng_.bernoulli(st.math_rate))
            sentences.push_back("I get $x^" + std::to_string(rng_.below(4) + 2) + "+1$ at that step.");

        std::string text;
        for (const auto& s : sentences) text += (text.empty() ? "" : " ") + s;
        return text;
    }

    const CorpusSpec& spec_;
    const TextBank& bank_;
    Rng& rng_;
    Timestamp ts_ = 0;
};

/// Largest-remainder allocation of `total` over weights.
std::array<std::size_t, 4> allocate(std::size_t total, const std::array<double, 4>& weights) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::array<std::size_t, 4> out{};
    std::array<double, 4> rem{};
    std::size_t used = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double exact = static_cast<double>(total) * weights[k] / sum;
        out[k] = static_cast<std::size_t>(std::floor(exact));
        rem[k] = exact - static_cast<double>(out[k]);
        used += out[k];
    }
    while (used < total) {
        const auto k = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
        ++out[k];
        rem[k] = -1.0;
        ++used;
    }
    return out;
}

Course generate_course(const CorpusSpec& spec, const TextBank& bank, std::size_t c) {
    const auto& cs = spec.courses[c];
    Rng rng(Rng::derive(spec.seed, c));

    const auto per_type = allocate(cs.threads, cs.forum_mix);
    std::vector<ForumType> types;
    std::vector<bool> labels;
    for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t n = per_type[k];
        std::vector<bool> cell(n, false);
        if (spec.label_mode == "exact") {
            const auto pos = static_cast<std::size_t>(std::lround(cs.intervention_rate[k] * static_cast<double>(n)));
            std::fill(cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(std::min(pos, n)), true);
            rng.shuffle(cell);
        } else {
            for (std::size_t i = 0; i < n; ++i) cell[i] = rng.bernoulli(cs.intervention_rate[k]);
        }
        for (bool b : cell) {
            types.push_back(kForumTypes[k]);
            labels.push_back(b);
        }
    }
    std::vector<std::size_t> order(types.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    Course course{cs.id, {}};
    ThreadWriter writer(spec, bank, rng);
    Timestamp start = 1'400'000'000 + static_cast<Timestamp>(c) * 10'000'000;
    for (std::size_t i = 0; i < order.size(); ++i) {
        start += rng.between(600, 7200);
        course.threads.push_back(writer.write(cs.id, i, types[order[i]], labels[order[i]], start));
    }
    return course;
}

ojson pair_json(const std::array<double, 2>& p) { return ojson::array({p[0], p[1]}); }

std::array<double, 2> pair_from(const ojson& j, const char* key, std::array<double, 2> fallback) {
    return j.contains(key) ? j.at(key).get<std::array<double, 2>>() : fallback;
}

}  // namespace

// ---------------------------------------------------------------------------

void CorpusSpec::validate() const {
    if (courses.empty()) throw ValidationError("corpus spec has no courses");
    for (const auto& c : courses) {
        if (c.id.empty()) throw ValidationError("course spec without id");
        if (c.threads < 1) throw ValidationError("course " + c.id + ": thread count must be >= 1");
        double mix = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            if (!(c.forum_mix[k] >= 0.0)) throw ValidationError("course " + c.id + ": negative forum mix");
            mix += c.forum_mix[k];
            check_probability(c.intervention_rate[k], "course " + c.id + ": intervention rate");
        }
        if (!(mix > 0.0)) throw ValidationError("course " + c.id + ": forum mix sums to zero");
    }
    if (text.background_terms < 1) throw ValidationError("need at least one background term");
    if (text.words_per_sentence_min < 1 || text.words_per_sentence_max < text.words_per_sentence_min)
        throw ValidationError("bad sentence length range");
    check_probability(text.signal_rate, "signal_rate");
    check_probability(text.signal_noise, "signal_noise");
    check_probability(text.title_signal_rate, "title_signal_rate");
    const auto& s = structure;
    for (std::size_t k = 0; k < 2; ++k) {
        check_mean(s.extra_posts[k], "extra_posts");
        check_mean(s.comments_per_post[k], "comments_per_post");
        check_mean(s.extra_sentences[k], "extra_sentences");
        check_probability(s.affirmation_rate[k], "affirmation_rate");
        check_probability(s.url_rate[k], "url_rate");
        check_probability(s.timeref_rate[k], "timeref_rate");
    }
    check_probability(s.course_ref_rate, "course_ref_rate");
    check_probability(s.math_rate, "math_rate");
    check_probability(s.staff_comment_rate, "staff_comment_rate");
    check_mean(s.followup_posts, "followup_posts");
    if (label_mode != "exact" && label_mode != "bernoulli")
        throw ValidationError("label_mode must be \"exact\" or \"bernoulli\"");
}

std::string CorpusSpec::dump() const {
    ojson cs = ojson::array();
    for (const auto& c : courses)
        cs.push_back({{"id", c.id},
                      {"threads", c.threads},
                      {"forum_mix", c.forum_mix},
                      {"intervention_rate", c.intervention_rate}});
    const auto& s = structure;
    ojson j{{"seed", seed},
            {"label_mode", label_mode},
            {"courses", cs},
            {"text",
             {{"background_terms", text.background_terms},
              {"words_per_sentence_min", text.words_per_sentence_min},
              {"words_per_sentence_max", text.words_per_sentence_max},
              {"signal_terms", text.signal_terms},
              {"signal_rate", text.signal_rate},
              {"signal_noise", text.signal_noise},
              {"title_signal_rate", text.title_signal_rate}}},
            {"structure",
             {{"extra_posts", pair_json(s.extra_posts)},
              {"comments_per_post", pair_json(s.comments_per_post)},
              {"extra_sentences", pair_json(s.extra_sentences)},
              {"affirmation_rate", pair_json(s.affirmation_rate)},
              {"url_rate", pair_json(s.url_rate)},
              {"timeref_rate", pair_json(s.timeref_rate)},
              {"course_ref_rate", s.course_ref_rate},
              {"math_rate", s.math_rate},
              {"staff_comment_rate", s.staff_comment_rate},
              {"followup_posts", s.followup_posts}}}};
    return j.dump(2);
}

CorpusSpec CorpusSpec::parse(std::string_view json_text) {
    CorpusSpec spec;
    try {
        const auto j = ojson::parse(json_text);
        spec.seed = j.value("seed", spec.seed);
        spec.label_mode = j.value("label_mode", spec.label_mode);
        for (const auto& c : j.at("courses")) {
            CourseSpec cs;
            cs.id = c.at("id").get<std::string>();
            cs.threads = c.at("threads").get<std::size_t>();
            cs.forum_mix = c.value("forum_mix", cs.forum_mix);
            cs.intervention_rate = c.at("intervention_rate").get<std::array<double, 4>>();
            spec.courses.push_back(std::move(cs));
        }
        if (j.contains("text")) {
            const auto& t = j.at("text");
            auto& tx = spec.text;
            tx.background_terms = t.value("background_terms", tx.background_terms);
            tx.words_per_sentence_min = t.value("words_per_sentence_min", tx.words_per_sentence_min);
            tx.words_per_sentence_max = t.value("words_per_sentence_max", tx.words_per_sentence_max);
            tx.signal_terms = t.value("signal_terms", tx.signal_terms);
            tx.signal_rate = t.value("signal_rate", tx.signal_rate);
            tx.signal_noise = t.value("signal_noise", tx.signal_noise);
            tx.title_signal_rate = t.value("title_signal_rate", tx.title_signal_rate);
        }
        if (j.contains("structure")) {
            const auto& s = j.at("structure");
            auto& st = spec.structure;
            st.extra_posts = pair_from(s, "extra_posts", st.extra_posts);
            st.comments_per_post = pair_from(s, "comments_per_post", st.comments_per_post);
            st.extra_sentences = pair_from(s, "extra_sentences", st.extra_sentences);
            st.affirmation_rate = pair_from(s, "affirmation_rate", st.affirmation_rate);
            st.url_rate = pair_from(s, "url_rate", st.url_rate);
            st.timeref_rate = pair_from(s, "timeref_rate", st.timeref_rate);
            st.course_ref_rate = s.value("course_ref_rate", st.course_ref_rate);
            st.math_rate = s.value("math_rate", st.math_rate);
            st.staff_comment_rate = s.value("staff_comment_rate", st.staff_comment_rate);
            st.followup_posts = s.value("followup_posts", st.followup_posts);
        }
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("corpus spec: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("corpus spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

CorpusSpec CorpusSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus spec " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

Corpus generate(const CorpusSpec& spec) {
    spec.validate();
    const TextBank bank(spec.text);
    Corpus corpus;
    for (std::size_t c = 0; c < spec.courses.size(); ++c) corpus.courses.push_back(generate_course(spec, bank, c));
    return corpus;
}

std::array<double, 4> rates_for_ratio(double course_ratio, const std::array<double, 4>& mix,
                                      const std::array<double, 4>& offsets) {
    std::array<double, 4> rates{};
    if (course_ratio <= 0.0) return rates;
    const double sum = std::accumulate(mix.begin(), mix.end(), 0.0);
    auto mean_at = [&](double base) {
        double m = 0.0;
        for (std::size_t k = 0; k < 4; ++k) m += mix[k] / sum / (1.0 + std::exp(-(base + offsets[k])));
        return m;
    };
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_at(mid) < course_ratio ? lo : hi) = mid;
    }
    for (std::size_t k = 0; k < 4; ++k) rates[k] = 1.0 / (1.0 + std::exp(-(0.5 * (lo + hi) + offsets[k])));
    return rates;
}

CorpusSpec default_d14_like_spec() {
    struct Row {
        std::size_t threads;
        double ratio;
    };
    static constexpr std::array<Row, 14> kRows{{{2058, 0.45}, {1123, 0.32}, {965, 0.60}, {632, 0.17},
                                                {624, 0.02},  {512, 0.49},  {323, 0.76}, {266, 0.76},
                                                {235, 0.55},  {232, 0.01},  {132, 0.46}, {126, 0.20},
                                                {125, 0.19},  {55, 0.00}}};
    // Thread shares of errata, lecture, homework and exam forums.
    const std::array<double, 4> mix{326.0, 2392.0, 3868.0, 822.0};
    CorpusSpec spec;
    for (std::size_t i = 0; i < kRows.size(); ++i) {
        CourseSpec cs;
        cs.id = (i < 9 ? "course0" : "course") + std::to_string(i + 1);
        cs.threads = kRows[i].threads;
        cs.forum_mix = mix;
        cs.intervention_rate = rates_for_ratio(kRows[i].ratio, mix);
        spec.courses.push_back(std::move(cs));
    }
    return spec;
}

CorpusSpec scaled(const CorpusSpec& spec, double factor) {
    CorpusSpec out = spec;
    for (auto& c : out.courses)
        c.threads = std::max<std::size_t>(10, static_cast<std::size_t>(std::lround(static_cast<double>(c.threads) * factor)));
    return out;
}

}  // namespace intervene
