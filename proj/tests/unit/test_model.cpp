#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "intervene/model.hpp"

using namespace testing;

namespace {

struct Dense {
    std::vector<std::vector<double>> rows;
    std::vector<bool> y;
};

Dense random_dense(Rng& rng, std::size_t n, std::size_t d, double density = 0.4) {
    Dense out;
    std::vector<double> truth(d);
    for (auto& t : truth) t = rng.uniform() * 4.0 - 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d, 0.0);
        double m = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            if (rng.bernoulli(density)) {
                row[j] = rng.uniform() * 2.0 - 1.0;
                m += row[j] * truth[j];
            }
        out.y.push_back(rng.bernoulli(sigmoid(m)));
        out.rows.push_back(std::move(row));
    }
    return out;
}

SparseVector sparse(const std::vector<double>& row) {
    SparseVector v;
    v.dim = row.size();
    for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j] != 0.0) {
            v.index.push_back(static_cast<std::uint32_t>(j));
            v.value.push_back(row[j]);
        }
    return v;
}

Dataset to_dataset(const Dense& d, std::size_t dim) {
    Dataset ds(dim);
    for (std::size_t i = 0; i < d.rows.size(); ++i) ds.add(sparse(d.rows[i]), d.y[i]);
    return ds;
}

double softplus_ref(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double objective_ref(const Dense& d, const std::vector<double>& w, double b, double lambda, double cw) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        double m = b;
        for (std::size_t j = 0; j < w.size(); ++j) m += d.rows[i][j] * w[j];
        total += d.y[i] ? cw * softplus_ref(-m) : softplus_ref(m);
    }
    for (double v : w) total += lambda * std::abs(v);
    return total;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("sparse matrix products match dense arithmetic") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = random_dense(rng, 1 + rng.below(15), 1 + rng.below(8));
        const auto dim = d.rows[0].size();
        const auto ds = to_dataset(d, dim);
        std::vector<double> w(dim), coef(d.rows.size());
        for (auto& v : w) v = rng.uniform() - 0.5;
        for (auto& v : coef) v = rng.uniform() - 0.5;
        std::vector<double> out(d.rows.size());
        ds.x.multiply(w, 0.25, out);
        std::vector<double> back(dim, 0.0);
        ds.x.multiply_transpose_add(coef, back);
        for (std::size_t i = 0; i < d.rows.size(); ++i) {
            double m = 0.25;
            for (std::size_t j = 0; j < dim; ++j) m += d.rows[i][j] * w[j];
            CHECK(out[i] == doctest::Approx(m).epsilon(1e-12));
        }
        for (std::size_t j = 0; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.rows.size(); ++i) s += coef[i] * d.rows[i][j];
            CHECK(back[j] == doctest::Approx(s).epsilon(1e-12));
        }
    }
}

TEST_CASE("objective matches the direct formula") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = random_dense(rng, 2 + rng.below(20), 1 + rng.below(6));
        const auto dim = d.rows[0].size();
        ModelParams p;
        p.weights.resize(dim);
        for (auto& v : p.weights) v = rng.uniform() * 6.0 - 3.0;
        p.bias = rng.uniform() * 2.0 - 1.0;
        TrainConfig cfg;
        cfg.lambda = rng.uniform();
        cfg.class_weight = 0.1 + rng.uniform() * 5.0;
        CHECK(objective(p, to_dataset(d, dim), cfg) ==
              doctest::Approx(objective_ref(d, p.weights, p.bias, cfg.lambda, cfg.class_weight)).epsilon(1e-10));
    }
}

TEST_CASE("zero start objective") {
    Dataset ds(1);
    SparseVector x{1, {0}, {1.0}};
    ds.add(x, true);
    ds.add(x, false);
    TrainConfig cfg;
    cfg.class_weight = 1.0;
    CHECK(train(ds, cfg).objective_trace.front() == doctest::Approx(2.0 * std::log(2.0)));
    cfg.class_weight = 2.0;
    CHECK(train(ds, cfg).objective_trace.front() == doctest::Approx(3.0 * std::log(2.0)));
}

TEST_CASE("gradient matches central differences") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const auto d = random_dense(rng, 3 + rng.below(15), 1 + rng.below(6));
        const auto dim = d.rows[0].size();
        const auto ds = to_dataset(d, dim);
        TrainConfig cfg;
        cfg.lambda = 0.0;
        cfg.class_weight = 0.2 + rng.uniform() * 4.0;
        ModelParams p;
        p.weights.resize(dim);
        for (auto& v : p.weights) v = rng.uniform() * 2.0 - 1.0;
        p.bias = rng.uniform() - 0.5;
        const auto g = smooth_gradient(p, ds, cfg);
        const double h = 1e-6;
        for (std::size_t j = 0; j <= dim; ++j) {
            auto plus = p, minus = p;
            double& up = j < dim ? plus.weights[j] : plus.bias;
            double& down = j < dim ? minus.weights[j] : minus.bias;
            up += h;
            down -= h;
            const double fd = (objective(plus, ds, cfg) - objective(minus, ds, cfg)) / (2.0 * h);
            const double an = j < dim ? g.weights[j] : g.bias;
            CHECK(an == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("soft threshold") {
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-3.0, 1.0) == -2.0);
    CHECK(soft_threshold(0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("objective trace never increases and solutions satisfy optimality") {
    Rng rng(19);
    for (int trial = 0; trial < 30; ++trial) {
        const auto d = random_dense(rng, 10 + rng.below(40), 2 + rng.below(10));
        const auto dim = d.rows[0].size();
        const auto ds = to_dataset(d, dim);
        TrainConfig cfg;
        cfg.lambda = 0.05 + rng.uniform();
        cfg.class_weight = 0.5 + rng.uniform() * 3.0;
        cfg.tolerance = 1e-12;
        cfg.max_iters = 20000;
        const auto r = train(ds, cfg);
        REQUIRE(r.objective_trace.size() >= 1);
        for (std::size_t k = 1; k < r.objective_trace.size(); ++k)
            CHECK(r.objective_trace[k] <= r.objective_trace[k - 1]);
        CHECK(r.objective_trace.back() == doctest::Approx(objective(r.params, ds, cfg)));

        const auto g = smooth_gradient(r.params, ds, cfg);
        CHECK(std::abs(g.bias) <= 1e-3);
        for (std::size_t j = 0; j < dim; ++j) {
            if (r.params.weights[j] == 0.0)
                CHECK(std::abs(g.weights[j]) <= cfg.lambda + 1e-3);
            else
                CHECK(g.weights[j] == doctest::Approx(-cfg.lambda * std::copysign(1.0, r.params.weights[j])).epsilon(1e-3).scale(1.0));
        }
    }
}

TEST_CASE("huge lambda zeroes every weight and leaves the prior log-odds in the bias") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        auto d = random_dense(rng, 10 + rng.below(30), 1 + rng.below(6));
        d.y[0] = true;
        d.y[1] = false;
        const auto dim = d.rows[0].size();
        const auto ds = to_dataset(d, dim);
        TrainConfig cfg;
        cfg.lambda = 1e6;
        cfg.class_weight = 0.25 + rng.uniform() * 4.0;
        cfg.tolerance = 1e-14;
        cfg.max_iters = 20000;
        const auto r = train(ds, cfg);
        CHECK(r.params.nonzeros() == 0);
        const double pos = static_cast<double>(ds.positives());
        const double neg = static_cast<double>(ds.size()) - pos;
        CHECK(r.params.bias == doctest::Approx(std::log(cfg.class_weight * pos / neg)).epsilon(1e-4));
    }
}

TEST_CASE("stronger lambda gives sparser models at the ends of a ladder") {
    Rng rng(29);
    const auto d = random_dense(rng, 80, 20, 0.3);
    const auto ds = to_dataset(d, 20);
    std::vector<std::size_t> nnz;
    for (double lambda : {1e-4, 1e-2, 1.0, 10.0, 1e4}) {
        TrainConfig cfg;
        cfg.lambda = lambda;
        cfg.tolerance = 1e-10;
        cfg.max_iters = 20000;
        nnz.push_back(train(ds, cfg).params.nonzeros());
    }
    CHECK(nnz.front() >= nnz[2]);
    CHECK(nnz[2] >= nnz.back());
    CHECK(nnz.back() == 0);
    CHECK(nnz.front() > 0);
}

TEST_CASE("separable data is fitted perfectly") {
    Dataset ds(3);
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
        const bool y = i % 2 == 0;
        ds.add(SparseVector{3, {0, 2}, {y ? 1.0 : -1.0, rng.uniform()}}, y);
    }
    TrainConfig cfg;
    cfg.lambda = 1e-2;
    const auto r = train(ds, cfg);
    CHECK(compute_metrics(predict_labels(r.params, ds), ds.y).f1 == 1.0);
}

TEST_CASE("training is deterministic") {
    Rng rng(37);
    const auto d = random_dense(rng, 60, 12);
    const auto ds = to_dataset(d, 12);
    TrainConfig cfg;
    cfg.lambda = 0.1;
    cfg.class_weight = 3.0;
    const auto a = train(ds, cfg), b = train(ds, cfg);
    CHECK(a.params == b.params);
    CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("prediction") {
    ModelParams p{{1.0, -2.0}, 0.5};
    const auto pr = predict(p, SparseVector{2, {1}, {1.0}});
    CHECK(pr.probability == doctest::Approx(sigmoid(-1.5)));
    CHECK_FALSE(pr.label);
    CHECK(predict(p, SparseVector{2, {}, {}}).label);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.class_weight = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    Dataset one(1);
    one.add(SparseVector{1, {0}, {1.0}}, true);
    CHECK_THROWS_AS(train(one, TrainConfig{}), DomainError);
}

TEST_CASE("weight grid and tuning") {
    const auto coarse = WeightGrid{}.coarse();
    REQUIRE(coarse.size() == 13);
    CHECK(coarse.front() == 1.0 / 16.0);
    CHECK(coarse.back() == 256.0);

    Rng rng(41);
    const auto d = random_dense(rng, 60, 8);
    const auto ds = to_dataset(d, 8);
    TrainConfig base;
    base.lambda = 0.5;
    const auto r = tune_class_weight(ds, ds, base);
    CHECK(r.evaluated.size() >= coarse.size());
    double best = 0.0;
    for (const auto& [w, f1] : r.evaluated) best = std::max(best, f1);
    CHECK(r.best_f1 == best);
    for (const auto& [w, f1] : r.evaluated)
        if (f1 == best) CHECK(std::abs(std::log(r.best_weight)) <= std::abs(std::log(w)));
    const auto again = tune_class_weight(ds, ds, base, {}, 3);
    CHECK(again.best_weight == r.best_weight);
    CHECK(again.evaluated == r.evaluated);
}

}  // TEST_SUITE
