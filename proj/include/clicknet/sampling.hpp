#pragma once

// Finite-sample click histograms drawn from exact click distributions.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "clicknet/errors.hpp"
#include "clicknet/rng.hpp"
#include "clicknet/states.hpp"

namespace clicknet {

struct SampleSpec {
    std::uint64_t sample_size = 1000;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

/// Click counts of m shots. Relative frequencies are counts / m, so they sum
/// to one and are multiples of 1/m by construction.
class ClickHistogram {
public:
    ClickHistogram() = default;

    ClickHistogram(std::vector<std::uint64_t> counts, DetectorConfig config)
        : counts_(std::move(counts)), config_(config) {
        config_.validate();
        if (counts_.size() != config_.bins()) throw ArgumentError("histogram length must be N + 1");
        sample_size_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
        if (sample_size_ == 0) throw ArgumentError("histogram must contain at least one shot");
    }

    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t sample_size() const { return sample_size_; }
    const DetectorConfig& config() const { return config_; }
    std::size_t size() const { return counts_.size(); }

    double freq(std::size_t k) const { return static_cast<double>(counts_[k]) / static_cast<double>(sample_size_); }

    std::vector<double> freqs() const {
        std::vector<double> f(counts_.size());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = freq(k);
        return f;
    }

    friend bool operator==(const ClickHistogram&, const ClickHistogram&) = default;

private:
    std::vector<std::uint64_t> counts_;
    DetectorConfig config_;
    std::uint64_t sample_size_ = 0;
};

/// Inverse-CDF sampler over a handful of categories. Zero-probability
/// categories are dropped, so they can never be drawn.
class CategoricalSampler {
public:
    explicit CategoricalSampler(std::span<const double> weights) {
        double acc = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (weights[k] > 0.0) {
                acc += weights[k];
                cdf_.push_back(acc);
                category_.push_back(k);
            }
        }
        if (cdf_.empty()) throw ArgumentError("categorical sampler needs positive weight");
        total_ = acc;
    }

    std::size_t draw(Rng& rng) const {
        const double u = rng.uniform() * total_;
        const std::size_t last = cdf_.size() - 1;
        for (std::size_t i = 0; i < last; ++i) {
            if (u < cdf_[i]) return category_[i];
        }
        return category_[last];
    }

    /// Adds `shots` draws into counts (indexed by category).
    void draw_counts(Rng& rng, std::uint64_t shots, std::span<std::uint64_t> counts) const {
        for (std::uint64_t s = 0; s < shots; ++s) ++counts[draw(rng)];
    }

private:
    std::vector<double> cdf_;
    std::vector<std::size_t> category_;
    double total_ = 0.0;
};

inline void check_normalized(const ClickDistribution& dist) {
    double total = 0.0;
    for (double p : dist.probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ArgumentError("click distribution has a negative or non-finite entry");
        total += p;
    }
    if (!(std::abs(total - 1.0) < 1e-9)) throw ArgumentError("click distribution is not normalized");
    if (dist.probs.size() != dist.config.bins()) throw ArgumentError("click distribution length must be N + 1");
}

/// Multinomial draw of m shots from the click distribution, reproducible from
/// (master_seed, stream_id).
inline ClickHistogram sample_histogram(const ClickDistribution& dist, const SampleSpec& spec) {
    if (spec.sample_size < 1) throw ArgumentError("sample size must be >= 1");
    check_normalized(dist);
    Rng rng = derive_stream(spec.master_seed, spec.stream_id);
    CategoricalSampler sampler(dist.probs);
    std::vector<std::uint64_t> counts(dist.size(), 0);
    sampler.draw_counts(rng, spec.sample_size, counts);
    return ClickHistogram(std::move(counts), dist.config);
}

// CSV row layout shared with the dataset writer:
//   stream_id,m,N,eta,family,nbar,f_0,...,f_N
inline std::string histogram_csv_header(int n_detectors) {
    std::string h = "stream_id,m,N,eta,family,nbar";
    for (int k = 0; k <= n_detectors; ++k) h += ",f_" + std::to_string(k);
    return h;
}

inline std::string histogram_csv_row(const ClickHistogram& hist, std::uint64_t stream_id, std::string_view family,
                                     double nbar) {
    std::string row = std::to_string(stream_id) + "," + std::to_string(hist.sample_size()) + "," +
                      std::to_string(hist.config().n_detectors) + "," + text::format_double(hist.config().efficiency) +
                      "," + std::string(family) + "," + text::format_double(nbar);
    for (std::size_t k = 0; k < hist.size(); ++k) row += "," + text::format_double(hist.freq(k));
    return row;
}

/// Rebuilds counts from written frequencies; rejects anything that is not an
/// exact multiple of 1/m or does not sum to one.
inline ClickHistogram histogram_from_freqs(std::span<const double> freqs, std::uint64_t m, const DetectorConfig& config) {
    if (m == 0) throw LoadError("sample size must be positive");
    std::vector<std::uint64_t> counts(freqs.size());
    std::uint64_t total = 0;
    double fsum = 0.0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        const double f = freqs[k];
        if (!std::isfinite(f) || f < 0.0 || f > 1.0) throw LoadError("frequency out of [0, 1]");
        fsum += f;
        const double c = std::round(f * static_cast<double>(m));
        if (std::abs(c / static_cast<double>(m) - f) > 1e-12) throw LoadError("frequency is not a multiple of 1/m");
        counts[k] = static_cast<std::uint64_t>(c);
        total += counts[k];
    }
    if (total != m || std::abs(fsum - 1.0) > 1e-9) throw LoadError("frequencies do not sum to one");
    try {
        return ClickHistogram(std::move(counts), config);
    } catch (const ArgumentError& e) {
        throw LoadError(e.what());
    }
}

}  // namespace clicknet
