#pragma once

// Least-squares linear baseline: label ~ intercept + coefficients . x.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clicknet/errors.hpp"
#include "clicknet/mlp.hpp"
#include "clicknet/sampling.hpp"

namespace clicknet {

struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
};

inline constexpr double kRidgeJitter = 1e-10;

/// Ordinary least squares through the normal equations with a small ridge
/// term. Click frequencies sum to one, which makes the design collinear with
/// the intercept; the jitter selects the minimum-norm-like solution. Rows are
/// accumulated in lexicographic order so the fit does not depend on row order.
inline LinearModel fit_linear(const Examples& data) {
    if (data.empty()) throw ArgumentError("linear fit of an empty dataset");
    const auto d = static_cast<Eigen::Index>(data.dim);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = data.row(a), rb = data.row(b);
        if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())) return true;
        if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) return false;
        return data.labels[a] < data.labels[b];
    });

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd x(d + 1);
    for (std::size_t idx : order) {
        x(0) = 1.0;
        const auto r = data.row(idx);
        for (Eigen::Index j = 0; j < d; ++j) x(j + 1) = r[static_cast<std::size_t>(j)];
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
        rhs += data.labels[idx] * x;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += kRidgeJitter;
    const Eigen::VectorXd beta = gram.ldlt().solve(rhs);

    LinearModel model;
    model.intercept = beta(0);
    model.coefficients.assign(beta.data() + 1, beta.data() + 1 + d);
    return model;
}

inline double predict_linear(const LinearModel& model, std::span<const double> x) {
    if (x.size() != model.coefficients.size()) throw ArgumentError("input dimension does not match the linear model");
    double y = model.intercept;
    for (std::size_t i = 0; i < x.size(); ++i) y += model.coefficients[i] * x[i];
    return y;
}

inline double predict_linear(const LinearModel& model, const ClickHistogram& hist) {
    const auto f = hist.freqs();
    return predict_linear(model, f);
}

}  // namespace clicknet
