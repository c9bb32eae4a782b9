#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "intervene/features.hpp"
#include "intervene/metrics.hpp"

namespace intervene {

/// Compressed sparse rows.
class SparseMatrix {
public:
    explicit SparseMatrix(std::size_t cols = 0) : cols_(cols) {}

    void add_row(const SparseVector& row);

    std::size_t rows() const { return row_ptr_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return col_.size(); }

    /// out[i] = row_i . w + bias
    void multiply(std::span<const double> w, double bias, std::span<double> out) const;
    /// out += sum_i coef[i] * row_i
    void multiply_transpose_add(std::span<const double> coef, std::span<double> out) const;

    std::span<const std::uint32_t> row_indices(std::size_t r) const {
        return {col_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

private:
    std::size_t cols_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;
};

struct Dataset {
    SparseMatrix x;
    std::vector<bool> y;

    explicit Dataset(std::size_t dim = 0) : x(dim) {}
    void add(const SparseVector& features, bool label);
    std::size_t size() const { return y.size(); }
    std::size_t positives() const;
};

struct TrainConfig {
    double lambda = 1e-3;
    /// Loss multiplier for positive instances; negatives carry 1.
    double class_weight = 1.0;
    std::size_t max_iters = 2000;
    /// Stop once an accepted step lowers the objective by less than this
    /// fraction of its value.
    double tolerance = 1e-6;
    /// Recorded for provenance; training itself draws no randomness.
    std::uint64_t seed = 0;

    void validate() const;
};

/// Backtracking constants of the proximal-gradient solver.
inline constexpr double kInitialStep = 1.0;
inline constexpr double kStepShrink = 0.5;
/// Each iteration first tries the previous step times this factor.
inline constexpr double kStepGrowth = 1.25;

struct ModelParams {
    std::vector<double> weights;
    double bias = 0.0;

    std::size_t nonzeros() const;
    bool operator==(const ModelParams&) const = default;
};

struct Prediction {
    double probability = 0.5;
    bool label = true;
};

struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
};

double sigmoid(double z);

/// Weighted negative log-likelihood plus lambda * ||w||_1 (bias unpenalized).
double objective(const ModelParams& params, const Dataset& data, const TrainConfig& cfg);

/// Gradient of the weighted log-loss alone.
Gradient smooth_gradient(const ModelParams& params, const Dataset& data, const TrainConfig& cfg);

/// sign(v) * max(|v| - t, 0)
double soft_threshold(double v, double t);

struct TrainResult {
    ModelParams params;
    /// Objective at the start point and after every accepted step.
    std::vector<double> objective_trace;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Monotone accelerated proximal gradient (FISTA with a monotone safeguard
/// and momentum restart) from zero, with backtracking on the quadratic
/// upper bound.  The step may grow between iterations.  Deterministic.
TrainResult train(const Dataset& data, const TrainConfig& cfg);

Prediction predict(const ModelParams& params, const SparseVector& x);
std::vector<bool> predict_labels(const ModelParams& params, const Dataset& data);

struct WeightGrid {
    double w_min = 1.0 / 16.0;
    double w_max = 256.0;
    double factor = 2.0;
    bool refine = true;

    /// Log-spaced coarse grid from w_min up to (at most) w_max.
    std::vector<double> coarse() const;
};

struct TuneResult {
    double best_weight = 1.0;
    double best_f1 = 0.0;
    /// Every (W, validation F1) evaluated, in evaluation order.
    std::vector<std::pair<double, double>> evaluated;
};

/// Picks the class weight maximizing validation F1.  Ties go to the weight
/// closest to 1 in log scale, then to the smaller weight.
TuneResult tune_class_weight(const Dataset& train, const Dataset& valid, const TrainConfig& base,
                             const WeightGrid& grid = {}, unsigned jobs = 1);

}  // namespace intervene
