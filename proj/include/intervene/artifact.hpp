#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "intervene/features.hpp"
#include "intervene/model.hpp"
#include "intervene/textprep.hpp"

namespace intervene {

inline constexpr int kArtifactFormatVersion = 1;

/// Everything needed to score new threads: text preparation, fitted
/// features and the trained weights.
struct ModelArtifact {
    TextprepConfig textprep;
    Featurizer featurizer;
    ModelParams params;
    double lambda = 1.0;
    double class_weight = 1.0;
    std::uint64_t seed = 0;

    std::string dump() const;
    /// Throws ValidationError on a format version other than kArtifactFormatVersion.
    static ModelArtifact parse(std::string_view json_text);
    static ModelArtifact load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

}  // namespace intervene
