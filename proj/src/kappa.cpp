#include "intervene/kappa.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "intervene/common.hpp"

namespace intervene {

using ojson = nlohmann::ordered_json;

AnnotationSet AnnotationSet::parse(std::string_view json_text) {
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("annotations: ") + e.what());
    }
    AnnotationSet set;
    try {
        for (const auto& item : j.at("items")) {
            Item it;
            it.id = item.at("id").get<std::string>();
            if (item.contains("tags")) it.tags = item.at("tags").get<std::vector<std::string>>();
            set.items.push_back(std::move(it));
        }
        for (const auto& [name, calls] : j.at("annotators").items()) {
            set.annotators.push_back(name);
            set.judgments.push_back(calls.get<std::vector<bool>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("annotations: ") + e.what());
    }
    set.validate();
    return set;
}

AnnotationSet AnnotationSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open annotation file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void AnnotationSet::validate() const {
    if (annotators.size() != judgments.size()) throw ValidationError("annotator names and judgments differ");
    for (std::size_t a = 0; a < judgments.size(); ++a)
        if (judgments[a].size() != items.size())
            throw ValidationError("annotator \"" + annotators[a] + "\" judged " + std::to_string(judgments[a].size()) +
                                  " items, expected " + std::to_string(items.size()));
}

AnnotationSet AnnotationSet::filter_by_tag(std::string_view tag) const {
    AnnotationSet out;
    out.annotators = annotators;
    out.judgments.resize(judgments.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (std::find(items[i].tags.begin(), items[i].tags.end(), tag) == items[i].tags.end()) continue;
        out.items.push_back(items[i]);
        for (std::size_t a = 0; a < judgments.size(); ++a) out.judgments[a].push_back(judgments[a][i]);
    }
    return out;
}

PairKappa cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("annotation vectors differ in length");
    if (a.empty()) throw std::invalid_argument("cannot compute kappa over zero items");
    const auto n = static_cast<double>(a.size());
    std::size_t agree = 0, a_pos = 0, b_pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i] ? 1 : 0;
        a_pos += a[i] ? 1 : 0;
        b_pos += b[i] ? 1 : 0;
    }
    PairKappa k;
    k.observed = static_cast<double>(agree) / n;
    // Integer numerator keeps the value exactly invariant under swapping
    // annotators or relabeling the classes.
    const std::size_t m = a.size();
    k.chance = static_cast<double>(a_pos * b_pos + (m - a_pos) * (m - b_pos)) / (n * n);
    if (k.chance < 1.0) k.kappa = (k.observed - k.chance) / (1.0 - k.chance);
    return k;
}

KappaResult kappa(const AnnotationSet& set) {
    set.validate();
    if (set.annotators.size() < 2) throw std::invalid_argument("kappa needs at least 2 annotators");
    if (set.items.size() < 2) throw std::invalid_argument("kappa needs at least 2 items");
    KappaResult result;
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t a = 0; a < set.annotators.size(); ++a) {
        for (std::size_t b = a + 1; b < set.annotators.size(); ++b) {
            auto k = cohen_kappa(set.judgments[a], set.judgments[b]);
            k.first = set.annotators[a];
            k.second = set.annotators[b];
            if (k.kappa) {
                sum += *k.kappa;
                ++defined;
            } else {
                result.warnings.push_back("kappa undefined for " + k.first + "/" + k.second +
                                          " (chance agreement is 1); excluded from the average");
            }
            result.pairs.push_back(std::move(k));
        }
    }
    if (defined) result.average = sum / static_cast<double>(defined);
    return result;
}

}  // namespace intervene
