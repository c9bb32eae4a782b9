#include "intervene/artifact.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "intervene/common.hpp"

namespace intervene {

using ojson = nlohmann::ordered_json;

std::string ModelArtifact::dump() const {
    const auto& vocab = featurizer.vocabulary();
    ojson weights = ojson::array();
    for (std::size_t j = 0; j < params.weights.size(); ++j)
        if (params.weights[j] != 0.0) weights.push_back(ojson::array({j, params.weights[j]}));

    ojson j{{"format_version", kArtifactFormatVersion},
            {"feature_flags", featurizer.flags().to_string()},
            {"lambda", lambda},
            {"class_weight", class_weight},
            {"seed", seed},
            {"dimension", params.weights.size()},
            {"vocabulary",
             {{"total_threads", vocab.total_threads()}, {"terms", vocab.terms()}, {"thread_df", vocab.thread_dfs()}}},
            {"scaler", {{"min", featurizer.scaler().min()}, {"max", featurizer.scaler().max()}}},
            {"weights", weights},
            {"bias", params.bias},
            {"textprep", ojson::parse(textprep.dump())}};
    return j.dump(2);
}

ModelArtifact ModelArtifact::parse(std::string_view json_text) {
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model artifact: ") + e.what());
    }
    ModelArtifact a;
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kArtifactFormatVersion)
            throw ValidationError("model artifact format version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kArtifactFormatVersion) + ")");
        const auto flags = FeatureFlags::parse(j.at("feature_flags").get<std::string>());
        const auto& v = j.at("vocabulary");
        Vocabulary vocab(v.at("terms").get<std::vector<std::string>>(),
                         v.at("thread_df").get<std::vector<std::uint32_t>>(), v.at("total_threads").get<std::size_t>());
        const auto& s = j.at("scaler");
        MinMaxScaler scaler(s.at("min").get<std::array<double, MetaFeatures::kCount>>(),
                            s.at("max").get<std::array<double, MetaFeatures::kCount>>());
        a.featurizer = Featurizer(flags, std::move(vocab), scaler);
        a.lambda = j.at("lambda").get<double>();
        a.class_weight = j.at("class_weight").get<double>();
        a.seed = j.value("seed", std::uint64_t{0});

        const auto dim = j.at("dimension").get<std::size_t>();
        if (dim != a.featurizer.dimension())
            throw ValidationError("model artifact dimension " + std::to_string(dim) + " does not match its features (" +
                                  std::to_string(a.featurizer.dimension()) + ")");
        a.params.weights.assign(dim, 0.0);
        for (const auto& w : j.at("weights")) {
            const auto idx = w.at(0).get<std::size_t>();
            if (idx >= dim) throw ValidationError("model artifact weight index out of range");
            a.params.weights[idx] = w.at(1).get<double>();
        }
        a.params.bias = j.at("bias").get<double>();
        a.textprep = TextprepConfig::parse(j.at("textprep").dump());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model artifact: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("model artifact: ") + e.what());
    }
    return a;
}

ModelArtifact ModelArtifact::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model artifact " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void ModelArtifact::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write model artifact " + path.string());
    out << dump() << '\n';
}

}  // namespace intervene
