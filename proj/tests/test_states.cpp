#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "clicknet/states.hpp"
#include "oracles.hpp"

using namespace clicknet;

namespace {

const DetectorConfig kIdeal{16, 1.0};

double total(const ClickDistribution& d) { return std::accumulate(d.probs.begin(), d.probs.end(), 0.0); }

std::vector<double> gf_route(int N, double eta, const std::function<oracle::Real(oracle::Real)>& gf) {
    const auto p = oracle::clicks_from_generating(N, [&](int j) { return gf(oracle::Real(j) * eta / N); });
    return {p.begin(), p.end()};
}

void expect_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], tol) << "k = " << k;
}

}  // namespace

TEST(DSymbol, HandValues) {
    EXPECT_EQ(d_symbol(0, 0, kIdeal), 1.0);
    EXPECT_NEAR(d_symbol(1, 1, kIdeal), 1.0, 1e-15);
    EXPECT_EQ(d_symbol(3, 2, kIdeal), 0.0);
}

TEST(DSymbol, RejectsBadArguments) {
    EXPECT_THROW(d_symbol(17, 3, kIdeal), ArgumentError);
    EXPECT_THROW(d_symbol(-1, 3, kIdeal), ArgumentError);
    EXPECT_THROW(d_symbol(1, -1, kIdeal), ArgumentError);
    EXPECT_THROW(d_symbol(1, 1, DetectorConfig{16, 0.0}), ArgumentError);
    EXPECT_THROW(d_symbol(1, 1, DetectorConfig{1, 1.0}), ArgumentError);
}

TEST(DSymbol, MatchesAlternatingSumAndIsComplete) {
    for (double eta : {1.0, 0.6, 0.3, 0.05}) {
        const DetectorConfig cfg{16, eta};
        for (int n = 0; n <= 40; ++n) {
            const auto ref = oracle::fock_alternating(n, 16, eta);
            double sum = 0.0;
            for (int k = 0; k <= 16; ++k) {
                const double d = d_symbol(k, n, cfg);
                EXPECT_NEAR(d, static_cast<double>(ref[k]), 1e-12) << "eta=" << eta << " n=" << n << " k=" << k;
                sum += d;
            }
            EXPECT_NEAR(sum, 1.0, 1e-13) << "eta=" << eta << " n=" << n;
        }
    }
}

TEST(ClickDistribution, Examples) {
    const auto vac = click_distribution(Coherent{0.0}, kIdeal);
    EXPECT_EQ(vac.probs[0], 1.0);
    for (int k = 1; k <= 16; ++k) EXPECT_EQ(vac.probs[k], 0.0);

    const auto one = click_distribution(Fock{1}, kIdeal);
    for (int k = 0; k <= 16; ++k) EXPECT_NEAR(one.probs[k], k == 1 ? 1.0 : 0.0, 1e-15);

    const auto coh = click_distribution(Coherent{16.0}, kIdeal);
    EXPECT_NEAR(coh.probs[0], std::exp(-16.0), 1e-20);
    EXPECT_NEAR(coh.probs[0], 1.13e-7, 0.01e-7);
    for (int k = 0; k <= 16; ++k) {
        const double want = static_cast<double>(oracle::choose(16, k)) * std::pow(std::exp(-1.0), 16 - k) *
                            std::pow(1.0 - std::exp(-1.0), k);
        EXPECT_NEAR(coh.probs[k], want, 1e-14);
    }
}

TEST(ClickDistribution, MixtureIsElementwiseCombination) {
    for (const DetectorConfig& cfg : {kIdeal, DetectorConfig{16, 0.6}, DetectorConfig{8, 0.9}}) {
        const auto a = click_distribution(Coherent{9.0}, cfg);
        const auto b = click_distribution(Fock{9}, cfg);
        for (double p : {0.0, 0.5, 1.0}) {
            const auto mix = click_distribution(Mixture{p, Coherent{9.0}, Fock{9}}, cfg);
            for (std::size_t k = 0; k < a.probs.size(); ++k) {
                EXPECT_DOUBLE_EQ(mix.probs[k], p * a.probs[k] + (1.0 - p) * b.probs[k]);
            }
        }
    }
}

TEST(ClickDistribution, NormalizedAndNonnegativeOnGrid) {
    for (double eta : {0.6, 1.0}) {
        const DetectorConfig cfg{16, eta};
        for (Family f : {Family::coherent, Family::thermal, Family::fock, Family::squeezed, Family::npats,
                         Family::even_coherent}) {
            for (int nbar = 1; nbar <= 16; ++nbar) {
                std::vector<PureState> states{params_for_mean(f, nbar, 1)};
                if (f == Family::npats && nbar >= 2) states.push_back(params_for_mean(f, nbar, 2));
                for (const auto& s : states) {
                    const StateSpec spec = std::visit([](const auto& p) -> StateSpec { return p; }, s);
                    const auto d = click_distribution(spec, cfg);
                    EXPECT_NEAR(total(d), 1.0, 1e-9) << to_text(spec) << " eta=" << eta;
                    for (double p : d.probs) EXPECT_GE(p, 0.0);
                }
            }
        }
    }
}

TEST(ClickDistribution, FockSupportBound) {
    for (int n = 0; n <= 20; ++n) {
        const auto d = click_distribution(Fock{n}, kIdeal);
        for (int k = n + 1; k <= 16; ++k) EXPECT_EQ(d.probs[k], 0.0) << "n=" << n << " k=" << k;
    }
}

TEST(ClickDistribution, CoherentMatchesGeneratingFunctionRoute) {
    for (double eta : {1.0, 0.6}) {
        for (double a : {0.3, 1.0, 4.0, 9.5, 16.0}) {
            const auto got = click_distribution(Coherent{a}, DetectorConfig{16, eta}).probs;
            expect_close(got, gf_route(16, eta, [a](oracle::Real x) { return oracle::coherent_gf(a, x); }), 1e-12);
        }
    }
}

TEST(ClickDistribution, SeriesFamiliesMatchClosedForms) {
    for (double eta : {1.0, 0.6, 0.25}) {
        const DetectorConfig cfg{16, eta};
        for (double nbar : {0.5, 1.0, 4.0, 8.0, 16.0}) {
            expect_close(click_distribution(Thermal{nbar}, cfg).probs,
                         gf_route(16, eta, [nbar](oracle::Real x) { return oracle::thermal_gf(nbar, x); }), 1e-10);
            const double r = std::asinh(std::sqrt(nbar));
            expect_close(click_distribution(Squeezed{r}, cfg).probs,
                         gf_route(16, eta, [r](oracle::Real x) { return oracle::squeezed_gf(r, x); }), 1e-10);
            for (int n : {1, 2, 3}) {
                expect_close(click_distribution(Npats{nbar, n}, cfg).probs,
                             gf_route(16, eta, [nbar, n](oracle::Real x) { return oracle::npats_gf(nbar, n, x); }),
                             1e-10);
            }
        }
    }
}

TEST(ClickDistribution, EvenCoherentMatchesAlternatingSum) {
    for (double eta : {1.0, 0.6}) {
        for (double a : {0.2, 1.0, 3.0, 8.0, 16.0}) {
            const auto got = click_distribution(EvenCoherent{a}, DetectorConfig{16, eta}).probs;
            expect_close(got, gf_route(16, eta, [a](oracle::Real x) { return oracle::even_coherent_gf(a, x); }),
                         1e-10);
            // Same route through the library's g(lambda eta, alpha).
            std::vector<double> via_g(17);
            for (int k = 0; k <= 16; ++k) {
                oracle::Real s = 0.0L;
                for (int i = 0; i <= k; ++i) {
                    s += ((i % 2) ? -1.0L : 1.0L) * oracle::choose(k, i) * g_function(eta * (16 - k + i), a, 16);
                }
                via_g[k] = static_cast<double>(oracle::choose(16, k) * s);
            }
            expect_close(got, via_g, 1e-8);
        }
    }
}

TEST(ClickDistribution, OtherDetectorCounts) {
    for (int N : {2, 5, 32}) {
        const DetectorConfig cfg{N, 0.8};
        expect_close(click_distribution(Thermal{3.0}, cfg).probs,
                     gf_route(N, 0.8, [](oracle::Real x) { return oracle::thermal_gf(3.0L, x); }), 1e-9);
        const auto ref = oracle::fock_alternating(7, N, 0.8L);
        expect_close(click_distribution(Fock{7}, cfg).probs, std::vector<double>(ref.begin(), ref.end()), 1e-10);
    }
}

TEST(ClickDistribution, TruncationFailureReportsResidual) {
    try {
        click_distribution(Thermal{1e6}, kIdeal);
        FAIL() << "expected a convergence error";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.residual(), 1e-12);
    }
}

TEST(ClickDistribution, RejectsInvalidStates) {
    EXPECT_THROW(click_distribution(Coherent{-1.0}, kIdeal), ArgumentError);
    EXPECT_THROW(click_distribution(Fock{-2}, kIdeal), ArgumentError);
    EXPECT_THROW(click_distribution(Npats{1.0, 0}, kIdeal), ArgumentError);
    EXPECT_THROW(click_distribution(Mixture{1.5, Coherent{1.0}, Fock{1}}, kIdeal), ArgumentError);
    EXPECT_THROW(click_distribution(Thermal{std::nan("")}, kIdeal), ArgumentError);
}

TEST(GFunction, Examples) {
    EXPECT_DOUBLE_EQ(g_function(0.0, 3.7, 16), 1.0);
    EXPECT_DOUBLE_EQ(g_function(5.0, 0.0, 16), 1.0);
    EXPECT_NEAR(g_function(16.0, 1.0, 16), 2.0 * std::exp(-1.0) / (1.0 + std::exp(-2.0)), 1e-15);
    EXPECT_NEAR(g_function(16.0, 1.0, 16), 0.648054, 1e-6);
    EXPECT_THROW(g_function(INFINITY, 1.0, 16), ArgumentError);
}

TEST(MeanPhotonNumber, Examples) {
    EXPECT_EQ(mean_photon_number(PureState{Fock{5}}), 5.0);
    EXPECT_DOUBLE_EQ(mean_photon_number(PureState{Npats{1.0, 2}}), 5.0);
    EXPECT_EQ(mean_photon_number(PureState{EvenCoherent{0.0}}), 0.0);
    EXPECT_DOUBLE_EQ(mean_photon_number(StateSpec{Mixture{0.25, Coherent{8.0}, Fock{4}}}), 0.25 * 8 + 0.75 * 4);
}

TEST(ParamsForMean, Examples) {
    EXPECT_NEAR(std::get<Squeezed>(params_for_mean(Family::squeezed, 1.0)).xi_abs, 0.88137, 1e-5);
    EXPECT_EQ(std::get<Fock>(params_for_mean(Family::fock, 3.7)).n, 3);
    EXPECT_EQ(std::get<Fock>(params_for_mean(Family::fock, 4.0)).n, 4);
    EXPECT_EQ(std::get<Coherent>(params_for_mean(Family::coherent, 16.0)).alpha_sq, 16.0);
    EXPECT_THROW(params_for_mean(Family::npats, 1.5, 2), ArgumentError);
    EXPECT_THROW(params_for_mean(Family::coherent, -1.0), ArgumentError);
    EXPECT_THROW(params_for_mean(Family::mixture, 1.0), ArgumentError);
}

TEST(ParamsForMean, RoundTrip) {
    for (double nbar = 1.0; nbar <= 16.0; nbar += 0.37) {
        for (Family f : {Family::coherent, Family::thermal, Family::squeezed, Family::even_coherent}) {
            EXPECT_NEAR(mean_photon_number(params_for_mean(f, nbar)), nbar, 1e-8) << family_tag(f);
        }
        EXPECT_NEAR(mean_photon_number(params_for_mean(Family::npats, nbar, 1)), nbar, 1e-8);
        if (nbar >= 2) {
            EXPECT_NEAR(mean_photon_number(params_for_mean(Family::npats, nbar, 2)), nbar, 1e-8);
        }
        EXPECT_EQ(mean_photon_number(params_for_mean(Family::fock, nbar)), std::floor(nbar));
    }
}

TEST(StateText, RoundTrip) {
    const std::vector<StateSpec> states{Coherent{2.5},      Thermal{0.125},      Fock{3},
                                        Squeezed{0.881373}, Npats{1.5, 2},       EvenCoherent{7.25},
                                        Mixture{0.3, Coherent{8.0}, Fock{8}}};
    for (const auto& s : states) {
        const auto txt = to_text(s);
        EXPECT_EQ(txt.find(','), std::string::npos);
        EXPECT_EQ(parse_state(txt), s) << txt;
    }
    EXPECT_EQ(to_text(StateSpec{Fock{3}}), "fock{n=3}");
    EXPECT_EQ(to_text(DetectorConfig{16, 1.0}), "detector{N=16;eta=1}");
    EXPECT_EQ(parse_detector("detector{N=8;eta=0.6}"), (DetectorConfig{8, 0.6}));
}

TEST(StateText, RejectsMalformed) {
    EXPECT_THROW(parse_state("fock{n=}"), ArgumentError);
    EXPECT_THROW(parse_state("laser{p=1}"), ArgumentError);
    EXPECT_THROW(parse_state("coherent{alpha_sq=1"), ArgumentError);
    EXPECT_THROW(parse_state("thermal{mean=2}"), ArgumentError);
}
