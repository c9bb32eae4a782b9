#include "intervene/metrics.hpp"

#include <stdexcept>

namespace intervene {

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    Metrics m{tp, fp, fn, tn, 0.0, 0.0, 0.0};
    const auto dtp = static_cast<double>(tp);
    if (tp + fp) m.precision = dtp / static_cast<double>(tp + fp);
    if (tp + fn) m.recall = dtp / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

Metrics compute_metrics(const std::vector<bool>& predictions, const std::vector<bool>& gold) {
    if (predictions.size() != gold.size())
        throw std::invalid_argument("predictions and gold labels differ in length");
    if (gold.empty()) throw std::invalid_argument("cannot score an empty prediction list");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i])
            gold[i] ? ++tp : ++fp;
        else
            gold[i] ? ++fn : ++tn;
    }
    return Metrics::from_counts(tp, fp, fn, tn);
}

Metrics all_positive_baseline(const std::vector<bool>& gold) {
    return compute_metrics(std::vector<bool>(gold.size(), true), gold);
}

Metrics average_metrics(std::span<const Metrics> items) {
    std::vector<double> equal(items.size(), 1.0);
    return weighted_average_metrics(items, equal);
}

Metrics weighted_average_metrics(std::span<const Metrics> items, std::span<const double> weights) {
    if (items.size() != weights.size()) throw std::invalid_argument("metrics and weights differ in length");
    Metrics out;
    double total = 0.0;
    for (double w : weights) total += w;
    if (items.empty() || total <= 0.0) return out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double w = weights[i] / total;
        out.tp += items[i].tp;
        out.fp += items[i].fp;
        out.fn += items[i].fn;
        out.tn += items[i].tn;
        out.precision += w * items[i].precision;
        out.recall += w * items[i].recall;
        out.f1 += w * items[i].f1;
    }
    return out;
}

Metrics pooled_metrics(std::span<const Metrics> items) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& m : items) {
        tp += m.tp;
        fp += m.fp;
        fn += m.fn;
        tn += m.tn;
    }
    return Metrics::from_counts(tp, fp, fn, tn);
}

}  // namespace intervene
