#include "intervene/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace intervene {

void SparseMatrix::add_row(const SparseVector& row) {
    if (row.dim != cols_) throw std::invalid_argument("row dimension does not match matrix");
    col_.insert(col_.end(), row.index.begin(), row.index.end());
    val_.insert(val_.end(), row.value.begin(), row.value.end());
    row_ptr_.push_back(col_.size());
}

void SparseMatrix::multiply(std::span<const double> w, double bias, std::span<double> out) const {
    for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
        double z = bias;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) z += val_[k] * w[col_[k]];
        out[r] = z;
    }
}

void SparseMatrix::multiply_transpose_add(std::span<const double> coef, std::span<double> out) const {
    for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
        const double c = coef[r];
        if (c == 0.0) continue;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[col_[k]] += c * val_[k];
    }
}

void Dataset::add(const SparseVector& features, bool label) {
    for (double v : features.value)
        if (!std::isfinite(v)) throw DomainError("non-finite feature value");
    x.add_row(features);
    y.push_back(label);
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), true));
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
    if (!(class_weight > 0.0) || !std::isfinite(class_weight))
        throw std::invalid_argument("class weight must be finite and positive");
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

std::size_t ModelParams::nonzeros() const {
    return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0.0; }));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

/// log(1 + exp(u)) without overflow.
double softplus(double u) {
    return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

double instance_weight(bool label, const TrainConfig& cfg) {
    return label ? cfg.class_weight : 1.0;
}

/// Weighted log-loss from precomputed margins.
double smooth_loss(const std::vector<bool>& y, std::span<const double> margins, const TrainConfig& cfg) {
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        loss += instance_weight(y[i], cfg) * softplus(y[i] ? -margins[i] : margins[i]);
    return loss;
}

double l1_norm(std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += std::abs(v);
    return s;
}

void check_dimension(const ModelParams& params, const Dataset& data) {
    if (params.weights.size() != data.x.cols())
        throw std::invalid_argument("parameter dimension does not match the data");
}

}  // namespace

double objective(const ModelParams& params, const Dataset& data, const TrainConfig& cfg) {
    check_dimension(params, data);
    std::vector<double> margins(data.size());
    data.x.multiply(params.weights, params.bias, margins);
    return smooth_loss(data.y, margins, cfg) + cfg.lambda * l1_norm(params.weights);
}

Gradient smooth_gradient(const ModelParams& params, const Dataset& data, const TrainConfig& cfg) {
    check_dimension(params, data);
    std::vector<double> coef(data.size());
    data.x.multiply(params.weights, params.bias, coef);
    Gradient g;
    g.weights.assign(data.x.cols(), 0.0);
    for (std::size_t i = 0; i < coef.size(); ++i) {
        coef[i] = instance_weight(data.y[i], cfg) * (sigmoid(coef[i]) - (data.y[i] ? 1.0 : 0.0));
        g.bias += coef[i];
    }
    data.x.multiply_transpose_add(coef, g.weights);
    return g;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.size();
    const std::size_t dim = data.x.cols();
    const std::size_t pos = data.positives();
    if (pos == 0 || pos == n) throw DomainError("training data must contain both classes");

    std::vector<double> cw(n), sign(n);
    for (std::size_t i = 0; i < n; ++i) {
        cw[i] = instance_weight(data.y[i], cfg);
        sign[i] = data.y[i] ? -1.0 : 1.0;
    }
    // Loss from margins; with `coef`, also the per-instance gradient factors.
    auto loss_at = [&](std::span<const double> m, double* coef) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = sign[i] * m[i];
            const double e = std::exp(-std::abs(u));
            loss += cw[i] * (std::max(u, 0.0) + std::log1p(e));
            if (coef) {
                // d softplus(u)/du = sigmoid(u)
                const double s = u >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
                coef[i] = cw[i] * sign[i] * s;
            }
        }
        return loss;
    };

    TrainResult result;
    auto& x = result.params;
    x.weights.assign(dim, 0.0);
    x.bias = 0.0;

    std::vector<double> x_prev(dim, 0.0), y(dim, 0.0), z(dim, 0.0), grad(dim, 0.0);
    // Margins at x, at the previous x, at y and at the trial point z.
    std::vector<double> m_x(n, 0.0), m_prev(n, 0.0), m_y(n, 0.0), m_z(n), coef(n);
    double y_bias = 0.0, x_prev_bias = 0.0;

    double f_x = loss_at(m_x, nullptr) + cfg.lambda * l1_norm(x.weights);
    result.objective_trace.push_back(f_x);

    double step = kInitialStep;
    double momentum = 1.0;
    bool at_rest = true;  // y == x, no momentum in play

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        result.iterations = iter + 1;

        const double f_y = loss_at(m_y, coef.data());
        double grad_bias = 0.0;
        for (double c : coef) grad_bias += c;
        std::fill(grad.begin(), grad.end(), 0.0);
        data.x.multiply_transpose_add(coef, grad);

        // Backtrack until the quadratic model at y majorizes the smooth part.
        step *= kStepGrowth;
        double f_z = 0.0;
        double z_bias = 0.0;
        for (;;) {
            const double shrink = step * cfg.lambda;
            for (std::size_t j = 0; j < dim; ++j) z[j] = soft_threshold(y[j] - step * grad[j], shrink);
            z_bias = y_bias - step * grad_bias;

            data.x.multiply(z, z_bias, m_z);
            f_z = loss_at(m_z, nullptr);

            double linear = grad_bias * (z_bias - y_bias);
            double sq = (z_bias - y_bias) * (z_bias - y_bias);
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = z[j] - y[j];
                linear += grad[j] * d;
                sq += d * d;
            }
            const double bound = f_y + linear + sq / (2.0 * step);
            if (f_z <= bound + 1e-12 * (1.0 + std::abs(f_y)) || step < 1e-300) break;
            step *= kStepShrink;
        }

        const double F_z = f_z + cfg.lambda * l1_norm(z);
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));

        if (F_z <= f_x) {
            x_prev.swap(x.weights);
            x.weights = z;
            x_prev_bias = x.bias;
            x.bias = z_bias;
            m_prev.swap(m_x);
            m_x = m_z;
            const double decrease = (f_x - F_z) / std::max(std::abs(f_x), std::numeric_limits<double>::min());
            f_x = F_z;
            result.objective_trace.push_back(f_x);

            const double beta = (momentum - 1.0) / next_momentum;
            for (std::size_t j = 0; j < dim; ++j) y[j] = x.weights[j] + beta * (x.weights[j] - x_prev[j]);
            y_bias = x.bias + beta * (x.bias - x_prev_bias);
            // Margins are affine in the parameters.
            for (std::size_t i = 0; i < n; ++i) m_y[i] = m_x[i] + beta * (m_x[i] - m_prev[i]);
            momentum = next_momentum;
            at_rest = false;

            if (decrease < cfg.tolerance) {
                result.converged = true;
                break;
            }
        } else {
            if (at_rest) {
                // A plain proximal step from x failed to descend: x is optimal to rounding.
                result.converged = true;
                break;
            }
            y = x.weights;
            y_bias = x.bias;
            m_y = m_x;
            momentum = 1.0;
            at_rest = true;
        }
    }
    return result;
}

Prediction predict(const ModelParams& params, const SparseVector& x) {
    if (x.dim != params.weights.size()) throw std::invalid_argument("feature dimension does not match the model");
    double z = params.bias;
    for (std::size_t k = 0; k < x.index.size(); ++k) {
        if (x.index[k] >= x.dim) throw std::invalid_argument("feature index out of range");
        z += x.value[k] * params.weights[x.index[k]];
    }
    const double p = sigmoid(z);
    return {p, p >= 0.5};
}

std::vector<bool> predict_labels(const ModelParams& params, const Dataset& data) {
    check_dimension(params, data);
    std::vector<double> margins(data.size());
    data.x.multiply(params.weights, params.bias, margins);
    std::vector<bool> out(data.size());
    for (std::size_t i = 0; i < margins.size(); ++i) out[i] = sigmoid(margins[i]) >= 0.5;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> WeightGrid::coarse() const {
    if (!(w_min > 0.0) || !(w_max >= w_min) || !(factor > 1.0))
        throw std::invalid_argument("weight grid needs 0 < w_min <= w_max and factor > 1");
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double w = w_min * std::pow(factor, k);
        if (w > w_max * (1.0 + 1e-12)) break;
        out.push_back(w);
    }
    return out;
}

namespace {

/// True when (w, f1) should replace the incumbent.
bool better(double w, double f1, double best_w, double best_f1) {
    if (f1 != best_f1) return f1 > best_f1;
    const double dw = std::abs(std::log(w)), db = std::abs(std::log(best_w));
    if (dw != db) return dw < db;
    return w < best_w;
}

}  // namespace

TuneResult tune_class_weight(const Dataset& train_set, const Dataset& valid, const TrainConfig& base,
                             const WeightGrid& grid, unsigned jobs) {
    if (valid.positives() == 0) throw DomainError("validation set has no positive instances");

    auto evaluate = [&](const std::vector<double>& weights) {
        std::vector<double> f1(weights.size());
        parallel_for(weights.size(), jobs, [&](std::size_t i) {
            TrainConfig cfg = base;
            cfg.class_weight = weights[i];
            const auto model = train(train_set, cfg);
            f1[i] = compute_metrics(predict_labels(model.params, valid), valid.y).f1;
        });
        return f1;
    };

    TuneResult result;
    result.best_f1 = -1.0;
    auto absorb = [&](const std::vector<double>& weights, const std::vector<double>& f1) {
        for (std::size_t i = 0; i < weights.size(); ++i) {
            result.evaluated.emplace_back(weights[i], f1[i]);
            if (result.best_f1 < 0.0 || better(weights[i], f1[i], result.best_weight, result.best_f1)) {
                result.best_weight = weights[i];
                result.best_f1 = f1[i];
            }
        }
    };

    const auto coarse = grid.coarse();
    absorb(coarse, evaluate(coarse));
    if (grid.refine) {
        const double half = std::sqrt(grid.factor);
        const std::vector<double> fine{result.best_weight / half, result.best_weight * half};
        absorb(fine, evaluate(fine));
    }
    return result;
}

}  // namespace intervene
