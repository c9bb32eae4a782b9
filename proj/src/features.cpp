#include "intervene/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace intervene {

std::string_view to_string(FeatureGroup group) {
    switch (group) {
        case FeatureGroup::Unigrams: return "unigrams";
        case FeatureGroup::ForumType: return "forum_type";
        case FeatureGroup::CourseRef: return "course_ref";
        case FeatureGroup::Affirmation: return "affirmation";
        case FeatureGroup::ThreadProps: return "thread_props";
        case FeatureGroup::NumSents: return "num_sents";
        case FeatureGroup::NonlexRef: return "nonlex_ref";
    }
    return "?";
}

FeatureFlags FeatureFlags::all() {
    FeatureFlags f;
    for (auto g : kFeatureGroups) f = f.with(g);
    return f;
}

FeatureFlags FeatureFlags::parse(std::string_view csv) {
    FeatureFlags f;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        auto comma = csv.find(',', pos);
        if (comma == std::string_view::npos) comma = csv.size();
        auto name = csv.substr(pos, comma - pos);
        while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
        while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
        if (name == "all") {
            f = all();
        } else if (!name.empty()) {
            bool known = false;
            for (auto g : kFeatureGroups) {
                if (intervene::to_string(g) == name) {
                    f = f.with(g);
                    known = true;
                }
            }
            if (!known) throw std::invalid_argument("unknown feature group \"" + std::string(name) + "\"");
        }
        pos = comma + 1;
    }
    if (f.empty()) throw std::invalid_argument("no feature groups enabled");
    return f;
}

std::string FeatureFlags::to_string() const {
    std::string out;
    for (auto g : kFeatureGroups) {
        if (!has(g)) continue;
        if (!out.empty()) out += ',';
        out += intervene::to_string(g);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::array<double, MetaFeatures::kCount> MetaFeatures::values() const {
    return {static_cast<double>(course_refs), static_cast<double>(affirmations), static_cast<double>(n_posts),
            static_cast<double>(n_comments),  static_cast<double>(n_items),      avg_comments_per_post,
            static_cast<double>(n_sentences), static_cast<double>(n_urls),       static_cast<double>(n_timerefs)};
}

const std::array<std::string_view, MetaFeatures::kCount>& MetaFeatures::names() {
    static constexpr std::array<std::string_view, kCount> kNames{
        "course_refs", "affirmations", "n_posts", "n_comments", "n_items",
        "avg_comments_per_post", "n_sentences", "n_urls", "n_timerefs"};
    return kNames;
}

ThreadText analyze_thread(const Thread& thread, const TextProcessor& prep) {
    ThreadText out;
    auto& meta = out.meta;
    auto absorb_tokens = [&](const CanonicalText& ct) {
        auto ts = prep.tokenize(ct);
        out.tokens.insert(out.tokens.end(), std::make_move_iterator(ts.tokens.begin()),
                          std::make_move_iterator(ts.tokens.end()));
    };
    absorb_tokens(prep.canonicalize(thread.title));

    auto absorb_item = [&](AuthorRole role, const std::string& text, bool reply) {
        const auto ct = prep.canonicalize(text);
        absorb_tokens(ct);
        meta.n_urls += ct.url_count;
        meta.n_timerefs += ct.timeref_count;
        meta.course_refs += prep.count_course_refs(ct.text);
        meta.n_sentences += prep.split_sentences(ct.text).size();
        if (reply && role == AuthorRole::Student && prep.is_affirmation(ct.text)) ++meta.affirmations;
    };
    for (std::size_t i = 0; i < thread.posts.size(); ++i) {
        const auto& p = thread.posts[i];
        absorb_item(p.role, p.text, i > 0);
        for (const auto& c : p.comments) absorb_item(c.role, c.text, true);
        meta.n_comments += p.comments.size();
    }
    meta.n_posts = thread.posts.size();
    meta.n_items = meta.n_posts + meta.n_comments;
    meta.avg_comments_per_post =
        meta.n_posts ? static_cast<double>(meta.n_comments) / static_cast<double>(meta.n_posts) : 0.0;
    return out;
}

MetaFeatures extract_meta(const Thread& thread, const TextProcessor& prep) {
    return analyze_thread(thread, prep).meta;
}

MinMaxScaler::MinMaxScaler(std::array<double, MetaFeatures::kCount> min, std::array<double, MetaFeatures::kCount> max)
    : min_(min), max_(max) {
    for (std::size_t k = 0; k < min_.size(); ++k)
        if (!(min_[k] <= max_[k])) throw ValidationError("scaler min exceeds max");
}

MinMaxScaler MinMaxScaler::fit(std::span<const MetaFeatures> training) {
    if (training.empty()) throw std::invalid_argument("cannot fit a scaler on zero instances");
    MinMaxScaler s;
    s.min_ = training.front().values();
    s.max_ = s.min_;
    for (const auto& m : training.subspan(1)) {
        const auto v = m.values();
        for (std::size_t k = 0; k < v.size(); ++k) {
            s.min_[k] = std::min(s.min_[k], v[k]);
            s.max_[k] = std::max(s.max_[k], v[k]);
        }
    }
    return s;
}

std::array<double, MetaFeatures::kCount> MinMaxScaler::apply(const MetaFeatures& meta) const {
    auto v = meta.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double range = max_[k] - min_[k];
        v[k] = range > 0.0 ? std::clamp((v[k] - min_[k]) / range, 0.0, 1.0) : 0.0;
    }
    return v;
}

// ---------------------------------------------------------------------------

double SparseVector::norm() const {
    double sq = 0.0;
    for (double v : value) sq += v * v;
    return std::sqrt(sq);
}

TermDictionary::TermDictionary(std::vector<std::string> terms) : terms_(std::move(terms)) {
    std::sort(terms_.begin(), terms_.end());
    terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
    ids_.reserve(terms_.size());
    for (std::uint32_t i = 0; i < terms_.size(); ++i) ids_.emplace(terms_[i], i);
}

std::optional<std::uint32_t> TermDictionary::find(std::string_view term) const {
    auto it = ids_.find(std::string(term));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

std::vector<PreparedThread> prepare_threads(std::span<const Thread* const> threads, const TextProcessor& prep,
                                            TermDictionary& dictionary) {
    std::vector<ThreadText> texts;
    texts.reserve(threads.size());
    std::set<std::string> all_terms;
    for (const Thread* t : threads) {
        texts.push_back(analyze_thread(*t, prep));
        all_terms.insert(texts.back().tokens.begin(), texts.back().tokens.end());
    }
    dictionary = TermDictionary(std::vector<std::string>(all_terms.begin(), all_terms.end()));

    std::vector<PreparedThread> out(threads.size());
    for (std::size_t i = 0; i < threads.size(); ++i) {
        out[i].forum_type = threads[i]->forum_type;
        out[i].meta = texts[i].meta;
        std::map<std::uint32_t, std::uint32_t> tf;
        for (const auto& tok : texts[i].tokens) ++tf[*dictionary.find(tok)];
        out[i].term_counts.assign(tf.begin(), tf.end());
    }
    return out;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> thread_df,
                       std::size_t total_threads)
    : terms_(std::move(terms)), df_(std::move(thread_df)), total_threads_(total_threads) {
    if (terms_.size() != df_.size()) throw ValidationError("vocabulary terms and df differ in length");
    if (!std::is_sorted(terms_.begin(), terms_.end()) ||
        std::adjacent_find(terms_.begin(), terms_.end()) != terms_.end())
        throw ValidationError("vocabulary terms must be sorted and unique");
    for (auto df : df_)
        if (df == 0 || df > total_threads_) throw ValidationError("vocabulary thread_df out of range");
    index_terms();
}

void Vocabulary::index_terms() {
    index_.clear();
    index_.reserve(terms_.size());
    for (std::uint32_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

Vocabulary Vocabulary::build(std::span<const Thread> threads, const TextProcessor& prep, std::size_t df_min) {
    if (threads.empty()) throw std::invalid_argument("cannot build a vocabulary from zero threads");
    std::map<std::string, std::uint32_t> df;
    for (const auto& t : threads) {
        const auto tokens = analyze_thread(t, prep).tokens;
        for (const auto& term : std::set<std::string>(tokens.begin(), tokens.end())) ++df[term];
    }
    Vocabulary v;
    v.total_threads_ = threads.size();
    for (const auto& [term, count] : df) {
        if (count < df_min) continue;
        v.terms_.push_back(term);
        v.df_.push_back(count);
    }
    v.index_terms();
    return v;
}

Vocabulary Vocabulary::build(std::span<const PreparedThread* const> threads, const TermDictionary& dictionary,
                             std::size_t df_min) {
    if (threads.empty()) throw std::invalid_argument("cannot build a vocabulary from zero threads");
    std::vector<std::uint32_t> df(dictionary.size(), 0);
    for (const auto* t : threads)
        for (const auto& [id, tf] : t->term_counts) ++df[id];
    Vocabulary v;
    v.total_threads_ = threads.size();
    v.source_ = &dictionary;
    v.from_source_.assign(dictionary.size(), -1);
    for (std::uint32_t id = 0; id < df.size(); ++id) {
        if (df[id] == 0 || df[id] < df_min) continue;
        v.from_source_[id] = static_cast<std::int32_t>(v.terms_.size());
        v.terms_.push_back(dictionary.term(id));
        v.df_.push_back(df[id]);
    }
    v.index_terms();
    return v;
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Vocabulary::map_counts(
    const PreparedThread& thread, const TermDictionary& dictionary) const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    out.reserve(thread.term_counts.size());
    if (&dictionary == source_) {
        // Dictionary ids and vocabulary indices share the same order.
        for (const auto& [id, tf] : thread.term_counts)
            if (auto local = from_source_[id]; local >= 0) out.emplace_back(static_cast<std::uint32_t>(local), tf);
        return out;
    }
    for (const auto& [id, tf] : thread.term_counts)
        if (auto local = index_of(dictionary.term(id))) out.emplace_back(*local, tf);
    std::sort(out.begin(), out.end());
    return out;
}

SparseVector tf_itf_weights(std::span<const std::pair<std::uint32_t, std::uint32_t>> counts,
                            const Vocabulary& vocab) {
    SparseVector out;
    out.dim = vocab.size();
    const auto total = static_cast<double>(vocab.total_threads());
    for (const auto& [index, tf] : counts) {
        const double w = static_cast<double>(tf) * std::log(total / static_cast<double>(vocab.thread_df(index)));
        if (w == 0.0) continue;
        out.index.push_back(index);
        out.value.push_back(w);
    }
    const double norm = out.norm();
    if (norm > 0.0)
        for (auto& v : out.value) v /= norm;
    return out;
}

SparseVector tf_itf_vector(const Thread& thread, const Vocabulary& vocab, const TextProcessor& prep) {
    std::map<std::uint32_t, std::uint32_t> tf;
    for (const auto& tok : analyze_thread(thread, prep).tokens)
        if (auto idx = vocab.index_of(tok)) ++tf[*idx];
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> counts(tf.begin(), tf.end());
    return tf_itf_weights(counts, vocab);
}

// ---------------------------------------------------------------------------

SparseVector FeatureVector::flatten() const {
    SparseVector out = terms;
    out.dim = dimension();
    auto offset = static_cast<std::uint32_t>(terms.dim);
    for (double b : forum_bits) {
        if (b != 0.0) {
            out.index.push_back(offset);
            out.value.push_back(b);
        }
        ++offset;
    }
    for (double d : dense) {
        if (d != 0.0) {
            out.index.push_back(offset);
            out.value.push_back(d);
        }
        ++offset;
    }
    return out;
}

std::vector<std::size_t> dense_columns(FeatureFlags flags) {
    std::vector<std::size_t> cols;
    if (flags.has(FeatureGroup::CourseRef)) cols.push_back(0);
    if (flags.has(FeatureGroup::Affirmation)) cols.push_back(1);
    if (flags.has(FeatureGroup::ThreadProps)) cols.insert(cols.end(), {2, 3, 4, 5});
    if (flags.has(FeatureGroup::NumSents)) cols.push_back(6);
    if (flags.has(FeatureGroup::NonlexRef)) cols.insert(cols.end(), {7, 8});
    return cols;
}

namespace {

FeatureVector assemble_parts(SparseVector terms, ForumType forum, const MetaFeatures& meta,
                             const MinMaxScaler& scaler, FeatureFlags flags) {
    FeatureVector fv;
    if (flags.has(FeatureGroup::Unigrams)) fv.terms = std::move(terms);
    if (flags.has(FeatureGroup::ForumType)) {
        fv.forum_bits.assign(kForumTypes.size(), 0.0);
        fv.forum_bits[static_cast<std::size_t>(forum)] = 1.0;
    }
    const auto cols = dense_columns(flags);
    if (!cols.empty()) {
        const auto scaled = scaler.apply(meta);
        for (auto c : cols) fv.dense.push_back(scaled[c]);
    }
    return fv;
}

}  // namespace

FeatureVector assemble(const Thread& thread, const Vocabulary& vocab, const MinMaxScaler& scaler,
                       FeatureFlags flags, const TextProcessor& prep) {
    SparseVector terms;
    if (flags.has(FeatureGroup::Unigrams)) terms = tf_itf_vector(thread, vocab, prep);
    return assemble_parts(std::move(terms), thread.forum_type, extract_meta(thread, prep), scaler, flags);
}

FeatureVector assemble(const PreparedThread& thread, const TermDictionary& dictionary, const Vocabulary& vocab,
                       const MinMaxScaler& scaler, FeatureFlags flags) {
    SparseVector terms;
    if (flags.has(FeatureGroup::Unigrams)) terms = tf_itf_weights(vocab.map_counts(thread, dictionary), vocab);
    return assemble_parts(std::move(terms), thread.forum_type, thread.meta, scaler, flags);
}

// ---------------------------------------------------------------------------

Featurizer::Featurizer(FeatureFlags flags, Vocabulary vocab, MinMaxScaler scaler)
    : flags_(flags), vocab_(std::move(vocab)), scaler_(scaler) {}

Featurizer Featurizer::fit(std::span<const PreparedThread* const> training, const TermDictionary& dictionary,
                           FeatureFlags flags, std::size_t df_min) {
    if (training.empty()) throw std::invalid_argument("cannot fit features on zero threads");
    Featurizer f;
    f.flags_ = flags;
    if (flags.has(FeatureGroup::Unigrams)) f.vocab_ = Vocabulary::build(training, dictionary, df_min);
    std::vector<MetaFeatures> metas;
    metas.reserve(training.size());
    for (const auto* t : training) metas.push_back(t->meta);
    f.scaler_ = MinMaxScaler::fit(metas);
    return f;
}

std::size_t Featurizer::dimension() const {
    std::size_t d = flags_.has(FeatureGroup::Unigrams) ? vocab_.size() : 0;
    if (flags_.has(FeatureGroup::ForumType)) d += kForumTypes.size();
    return d + dense_columns(flags_).size();
}

SparseVector Featurizer::transform(const PreparedThread& thread, const TermDictionary& dictionary) const {
    return assemble(thread, dictionary, vocab_, scaler_, flags_).flatten();
}

SparseVector Featurizer::transform(const Thread& thread, const TextProcessor& prep) const {
    return assemble(thread, vocab_, scaler_, flags_, prep).flatten();
}

std::string Featurizer::dimension_name(std::size_t index) const {
    const std::size_t n_terms = flags_.has(FeatureGroup::Unigrams) ? vocab_.size() : 0;
    if (index < n_terms) return "term:" + vocab_.term(index);
    index -= n_terms;
    if (flags_.has(FeatureGroup::ForumType)) {
        if (index < kForumTypes.size()) return "forum:" + std::string(to_string(kForumTypes[index]));
        index -= kForumTypes.size();
    }
    const auto cols = dense_columns(flags_);
    if (index < cols.size()) return "meta:" + std::string(MetaFeatures::names()[cols[index]]);
    return "?";
}

}  // namespace intervene
