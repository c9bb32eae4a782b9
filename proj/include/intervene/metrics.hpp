#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace intervene {

/// Confusion counts with the derived precision/recall/F1.  Zero
/// denominators yield 0.  When Metrics come out of an average (see
/// `average_metrics`) the rates are averaged and the counts summed, so the
/// rates need not equal the formulas applied to the counts.
struct Metrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
};

Metrics compute_metrics(const std::vector<bool>& predictions, const std::vector<bool>& gold);

/// Metrics of the predictor that calls every instance positive.
Metrics all_positive_baseline(const std::vector<bool>& gold);

/// Plain mean of the rates; counts are summed.
Metrics average_metrics(std::span<const Metrics> items);

/// Sum of weight_i * rate_i with weights normalized to sum to 1; counts summed.
Metrics weighted_average_metrics(std::span<const Metrics> items, std::span<const double> weights);

/// Rates recomputed from the summed counts.
Metrics pooled_metrics(std::span<const Metrics> items);

}  // namespace intervene
