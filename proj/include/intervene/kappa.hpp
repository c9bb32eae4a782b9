#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace intervene {

/// Binary judgments of several annotators over one shared item list.
struct AnnotationSet {
    struct Item {
        std::string id;
        std::vector<std::string> tags;
    };

    std::vector<Item> items;
    std::vector<std::string> annotators;
    /// judgments[a][i]: annotator a's call on item i.
    std::vector<std::vector<bool>> judgments;

    /// {"items": [{"id": .., "tags": [..]}], "annotators": {"name": [bool, ..]}}
    static AnnotationSet parse(std::string_view json_text);
    static AnnotationSet load(const std::filesystem::path& path);

    /// Items carrying `tag`, judgments restricted accordingly.
    AnnotationSet filter_by_tag(std::string_view tag) const;
    void validate() const;
};

struct PairKappa {
    std::string first;
    std::string second;
    double observed = 0.0;
    double chance = 0.0;
    /// Empty when chance agreement is 1.
    std::optional<double> kappa;
};

struct KappaResult {
    std::vector<PairKappa> pairs;
    /// Mean over the defined pairwise values.
    std::optional<double> average;
    std::vector<std::string> warnings;
};

/// Cohen's kappa between two judgment vectors: (p_o - p_e) / (1 - p_e).
PairKappa cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

/// Cohen's kappa for every annotator pair, averaged.
KappaResult kappa(const AnnotationSet& set);

}  // namespace intervene
