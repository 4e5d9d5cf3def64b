#pragma once

// Matrix-of-moments nonclassicality test on click data.
//
// Normally ordered no-click moments follow from the click statistics through
//     <:m^l:> = sum_k C(N-k, l) / C(N, l) * p_k,
// a consequence of C(N,k) C(N-k,l) = C(N,l) C(N-l,k). The Hankel matrix
// M_(s,t) = <:m^(s+t):>, s,t = 0..K/2, is positive semidefinite for every
// classical field; a significantly negative minimal eigenvalue certifies
// nonclassicality.

#include <cmath>
#include <cstdint>
#include <optional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clicknet/errors.hpp"
#include "clicknet/rng.hpp"
#include "clicknet/sampling.hpp"
#include "clicknet/states.hpp"

namespace clicknet {

struct MomentVector {
    std::vector<double> mu;  // mu[0] == 1
    int order = 2;
};

struct MomentsTestResult {
    double min_eigenvalue = 0.0;
    double error = 0.0;
    double significance = 0.0;
    int order = 2;
    int bootstrap_replicates = 0;

    bool nonclassical(double threshold = 3.0) const { return significance > threshold; }
};

inline constexpr double kDefaultSignificance = 3.0;
inline constexpr int kDefaultBootstrap = 1000;

namespace detail {

inline void check_order(int order, int n_detectors) {
    if (order <= 0 || order % 2 != 0 || order > n_detectors) {
        throw ArgumentError("moment order must be even with 0 < K <= N, got " + std::to_string(order));
    }
}

/// weight(k, l) = C(N-k, l) / C(N, l), laid out [k * (K+1) + l].
inline std::vector<double> moment_weights(int n_detectors, int order) {
    std::vector<double> w((n_detectors + 1) * (order + 1));
    for (int k = 0; k <= n_detectors; ++k) {
        for (int l = 0; l <= order; ++l) {
            w[k * (order + 1) + l] = binomial(n_detectors - k, l) / binomial(n_detectors, l);
        }
    }
    return w;
}

inline MomentVector moments_from_weights(std::span<const double> freqs, std::span<const double> weights, int order) {
    MomentVector out{std::vector<double>(order + 1, 0.0), order};
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        if (freqs[k] == 0.0) continue;
        for (int l = 1; l <= order; ++l) out.mu[l] += weights[k * (order + 1) + l] * freqs[k];
    }
    out.mu[0] = 1.0;
    return out;
}

}  // namespace detail

inline MomentVector estimate_moments(std::span<const double> freqs, int n_detectors, int order) {
    detail::check_order(order, n_detectors);
    if (freqs.size() != static_cast<std::size_t>(n_detectors) + 1) throw ArgumentError("frequency vector must have N + 1 entries");
    const auto w = detail::moment_weights(n_detectors, order);
    return detail::moments_from_weights(freqs, w, order);
}

inline MomentVector estimate_moments(const ClickHistogram& hist, int order) {
    const auto f = hist.freqs();
    return estimate_moments(f, hist.config().n_detectors, order);
}

inline MomentVector estimate_moments(const ClickDistribution& dist, int order) {
    return estimate_moments(dist.probs, dist.config.n_detectors, order);
}

inline Eigen::MatrixXd moment_matrix(const MomentVector& m) {
    if (m.order <= 0 || m.order % 2 != 0 || m.mu.size() != static_cast<std::size_t>(m.order) + 1) {
        throw ArgumentError("moment vector must hold mu_0..mu_K for even K");
    }
    const int dim = m.order / 2 + 1;
    Eigen::MatrixXd M(dim, dim);
    for (int s = 0; s < dim; ++s) {
        for (int t = 0; t < dim; ++t) M(s, t) = m.mu[s + t];
    }
    return M;
}

namespace detail {

inline double min_eigenvalue_2x2(double a, double b, double c) {
    const double tr = a + c;
    const double det = a * c - b * b;
    const double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
    const double lmax = 0.5 * (tr + disc);
    if (lmax <= 0.0) return 0.5 * (tr - disc);
    return det / lmax;
}

}  // namespace detail

/// Smallest eigenvalue of a symmetric matrix. The 2x2 case uses
/// det / lambda_max, the cancellation-free form of (tr - sqrt(tr^2 - 4 det)) / 2.
inline double min_eigenvalue(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols() || M.rows() == 0) throw ArgumentError("min_eigenvalue needs a nonempty square matrix");
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < M.cols(); ++j) {
            if (M(i, j) != M(j, i)) throw ArgumentError("min_eigenvalue needs a symmetric matrix");
        }
    }
    if (M.rows() == 1) return M(0, 0);
    if (M.rows() == 2) return detail::min_eigenvalue_2x2(M(0, 0), M(0, 1), M(1, 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

namespace detail {

inline double min_eigenvalue_of(const MomentVector& m) {
    if (m.order == 2) return min_eigenvalue_2x2(m.mu[0], m.mu[1], m.mu[2]);
    return min_eigenvalue(moment_matrix(m));
}

}  // namespace detail

inline constexpr std::uint64_t kShotTableLimit = 1u << 24;

/// Minimal eigenvalue of M^(K) from the histogram, its bootstrap standard
/// error over `replicates` resamples of the m shots, and r = -x / error.
/// When every resample is identical the error is zero and r is +inf for a
/// negative eigenvalue, 0 otherwise.
inline MomentsTestResult moments_test(const ClickHistogram& hist, int order, int replicates, Rng& rng) {
    const int N = hist.config().n_detectors;
    detail::check_order(order, N);
    if (hist.sample_size() < 2) throw ArgumentError("moments test needs at least two shots");
    if (replicates < 100) throw ArgumentError("moments test needs at least 100 bootstrap replicates");

    const auto weights = detail::moment_weights(N, order);
    const auto freqs = hist.freqs();
    const double x = detail::min_eigenvalue_of(detail::moments_from_weights(freqs, weights, order));

    // Resample the m recorded shots directly; for huge m fall back to the
    // equivalent categorical draw.
    const std::uint64_t m = hist.sample_size();
    std::vector<std::uint8_t> shots;
    std::optional<CategoricalSampler> sampler;
    if (m <= kShotTableLimit) {
        shots.reserve(m);
        for (std::size_t k = 0; k < freqs.size(); ++k) shots.insert(shots.end(), hist.counts()[k], std::uint8_t(k));
    } else {
        sampler.emplace(freqs);
    }
    std::vector<std::uint64_t> counts(freqs.size());
    std::vector<double> resampled(freqs.size());
    double mean = 0.0, m2 = 0.0;
    for (int b = 0; b < replicates; ++b) {
        std::fill(counts.begin(), counts.end(), 0);
        if (sampler) {
            sampler->draw_counts(rng, m, counts);
        } else {
            for (std::uint64_t s = 0; s < m; ++s) ++counts[shots[rng.below(m)]];
        }
        for (std::size_t k = 0; k < counts.size(); ++k) resampled[k] = static_cast<double>(counts[k]) / static_cast<double>(m);
        const double xb = detail::min_eigenvalue_of(detail::moments_from_weights(resampled, weights, order));
        const double delta = xb - mean;
        mean += delta / (b + 1);
        m2 += delta * (xb - mean);
    }
    const double error = std::sqrt(m2 / (replicates - 1));

    MomentsTestResult out{x, error, 0.0, order, replicates};
    if (error > 0.0) out.significance = -x / error;
    else out.significance = x < 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return out;
}

inline MomentsTestResult moments_test(const ClickHistogram& hist, int order, int replicates, std::uint64_t seed,
                                      std::uint64_t stream_id) {
    Rng rng = derive_stream(seed, stream_id);
    return moments_test(hist, order, replicates, rng);
}

/// Minimal eigenvalue of the exact M^(K) of a click distribution.
inline double exact_min_eigenvalue(const ClickDistribution& dist, int order = 2) {
    return detail::min_eigenvalue_of(estimate_moments(dist, order));
}

inline std::string moments_csv_header() { return "family,nbar,m,eta,x_mom,delta,r_mom,flagged"; }

inline std::string moments_csv_row(std::string_view family, double nbar, std::uint64_t m, double eta,
                                   const MomentsTestResult& r, double threshold = kDefaultSignificance) {
    using text::format_double;
    return std::string(family) + "," + format_double(nbar) + "," + std::to_string(m) + "," + format_double(eta) + "," +
           format_double(r.min_eigenvalue) + "," + format_double(r.error) + "," + format_double(r.significance) + "," +
           (r.nonclassical(threshold) ? "1" : "0");
}

}  // namespace clicknet
