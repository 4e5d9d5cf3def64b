#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <numeric>
#include <set>

#include "clicknet/sampling.hpp"
#include "clicknet/states.hpp"

using namespace clicknet;

namespace {

const DetectorConfig kIdeal{16, 1.0};

ClickDistribution thermal4() { return click_distribution(Thermal{4.0}, kIdeal); }

}  // namespace

TEST(SampleHistogram, DegenerateDistribution) {
    const auto h = sample_histogram(click_distribution(Coherent{0.0}, kIdeal), {100, 5, 0});
    EXPECT_EQ(h.freq(0), 1.0);
    for (std::size_t k = 1; k < h.size(); ++k) EXPECT_EQ(h.freq(k), 0.0);
}

TEST(SampleHistogram, SingleShot) {
    for (std::uint64_t id = 0; id < 50; ++id) {
        const auto f = sample_histogram(thermal4(), {1, 9, id}).freqs();
        EXPECT_EQ(std::count(f.begin(), f.end(), 1.0), 1);
        EXPECT_EQ(std::count(f.begin(), f.end(), 0.0), 16);
    }
}

TEST(SampleHistogram, FockOneIsDeterministic) {
    const auto h = sample_histogram(click_distribution(Fock{1}, kIdeal), {1000, 3, 17});
    EXPECT_EQ(h.counts()[1], 1000u);
    EXPECT_EQ(h.freq(1), 1.0);
}

TEST(SampleHistogram, SameStreamSameHistogram) {
    EXPECT_EQ(sample_histogram(thermal4(), {1000, 42, 7}), sample_histogram(thermal4(), {1000, 42, 7}));
}

TEST(SampleHistogram, PinnedStreams) {
    const std::vector<std::uint64_t> s42_0{209, 183, 134, 111, 102, 86, 52, 36, 29, 17, 19, 9, 3, 7, 2, 0, 1};
    const std::vector<std::uint64_t> s42_1{204, 175, 137, 128, 81, 69, 60, 35, 30, 25, 22, 14, 8, 10, 1, 1, 0};
    const std::vector<std::uint64_t> s43_0{214, 161, 147, 124, 81, 70, 60, 41, 40, 20, 20, 10, 4, 5, 3, 0, 0};
    EXPECT_EQ(sample_histogram(thermal4(), {1000, 42, 0}).counts(), s42_0);
    EXPECT_EQ(sample_histogram(thermal4(), {1000, 42, 1}).counts(), s42_1);
    EXPECT_EQ(sample_histogram(thermal4(), {1000, 43, 0}).counts(), s43_0);
}

TEST(SampleHistogram, FrequenciesAreExactMultiples) {
    for (std::uint64_t m : {1ull, 7ull, 100ull, 1000ull, 3333ull}) {
        for (double nbar : {0.5, 3.0, 12.0}) {
            const auto h = sample_histogram(click_distribution(Squeezed{std::asinh(std::sqrt(nbar))}, kIdeal),
                                            {m, 11, static_cast<std::uint64_t>(nbar * 10)});
            EXPECT_EQ(h.sample_size(), m);
            std::uint64_t total = 0;
            for (std::size_t k = 0; k < h.size(); ++k) {
                total += h.counts()[k];
                EXPECT_EQ(h.freq(k), static_cast<double>(h.counts()[k]) / static_cast<double>(m));
                EXPECT_NEAR(h.freq(k) * m, static_cast<double>(h.counts()[k]), 1e-9);
            }
            EXPECT_EQ(total, m);
        }
    }
}

TEST(SampleHistogram, ChiSquaredGoodnessOfFit) {
    const auto dist = thermal4();
    const std::uint64_t m = 100000;
    const auto h = sample_histogram(dist, {m, 20240601, 1});
    // Pool the sparse upper tail so every expected count is at least 5.
    double stat = 0.0, exp_acc = 0.0, obs_acc = 0.0;
    int cells = 0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
        exp_acc += dist.probs[k] * m;
        obs_acc += static_cast<double>(h.counts()[k]);
        if (exp_acc >= 5.0 || k + 1 == dist.size()) {
            stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
            exp_acc = obs_acc = 0.0;
            ++cells;
        }
    }
    ASSERT_GE(cells, 10);
    const boost::math::chi_squared chi2(cells - 1);
    EXPECT_LT(stat, boost::math::quantile(chi2, 0.999));
}

TEST(SampleHistogram, RejectsUnnormalizedInput) {
    ClickDistribution bad{std::vector<double>(17, 0.1), kIdeal};
    EXPECT_THROW(sample_histogram(bad, {10, 0, 0}), ArgumentError);
    ClickDistribution negative{std::vector<double>(17, 0.0), kIdeal};
    negative.probs[0] = 1.5;
    negative.probs[1] = -0.5;
    EXPECT_THROW(sample_histogram(negative, {10, 0, 0}), ArgumentError);
    EXPECT_THROW(sample_histogram(thermal4(), {0, 0, 0}), ArgumentError);
}

TEST(SampleHistogram, CsvRow) {
    const auto h = sample_histogram(click_distribution(Fock{1}, kIdeal), {4, 0, 0});
    EXPECT_EQ(histogram_csv_header(2), "stream_id,m,N,eta,family,nbar,f_0,f_1,f_2");
    EXPECT_EQ(histogram_csv_row(h, 12, "fock", 1.5), "12,4,16,1,fock,1.5,0,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0");
}

TEST(HistogramFromFreqs, ValidatesInvariants) {
    std::vector<double> f(17, 0.0);
    f[0] = 0.25;
    f[3] = 0.75;
    const auto h = histogram_from_freqs(f, 4, kIdeal);
    EXPECT_EQ(h.counts()[3], 3u);
    f[3] = 0.7;
    EXPECT_THROW(histogram_from_freqs(f, 4, kIdeal), LoadError);
    f[3] = 0.5;
    EXPECT_THROW(histogram_from_freqs(f, 4, kIdeal), LoadError);
}

TEST(Rng, BelowIsInRangeAndCoversAll) {
    Rng rng = derive_stream(1, 2);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.below(17);
        ASSERT_LT(v, 17u);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 17u);
    EXPECT_EQ(rng.below(1), 0u);
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng = derive_stream(3, 4);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 10000, 0.5, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    Rng rng = derive_stream(5, 6);
    rng.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Rng, StreamKeyPacksFields) {
    EXPECT_EQ(stream_key(1, 0, 0), 1ull << 56);
    EXPECT_EQ(stream_key(2, 3, 4), (2ull << 56) | (3ull << 32) | 4ull);
    EXPECT_NE(stream_seed(0, 0), stream_seed(0, 1));
    EXPECT_NE(stream_seed(0, 0), stream_seed(1, 0));
}
