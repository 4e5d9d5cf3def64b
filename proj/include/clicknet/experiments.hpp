#pragma once

// End-to-end scenarios: sweep state families, sample histograms, score every
// histogram with the network and the moments test, and summarize flag rates.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "clicknet/datagen.hpp"
#include "clicknet/errors.hpp"
#include "clicknet/linear.hpp"
#include "clicknet/mlp.hpp"
#include "clicknet/moments.hpp"
#include "clicknet/parallel.hpp"
#include "clicknet/rng.hpp"
#include "clicknet/sampling.hpp"
#include "clicknet/states.hpp"

namespace clicknet {

inline constexpr double kDefaultNetworkThreshold = 0.9;

/// Either an n-bar sweep over one family or a p sweep over the mixture
/// p |alpha><alpha| + (1-p) |n><n| with |alpha|^2 = n.
struct SweepSpec {
    std::string tag;
    FamilySelector family{};
    int mixture_photons = 0;

    bool is_mixture() const { return mixture_photons > 0; }
};

inline SweepSpec family_sweep(FamilySelector sel) { return {sel.tag(), sel, 0}; }

inline SweepSpec mixture_sweep(int photons) {
    if (photons < 1) throw ArgumentError("mixture photon number must be >= 1");
    return {"mixture" + std::to_string(photons), {Family::mixture, 1}, photons};
}

inline SweepSpec parse_sweep(std::string_view tag) {
    tag = text::trim(tag);
    if (tag.starts_with("mixture")) {
        int n = 0;
        if (!text::parse_integer(tag.substr(7), n)) throw ArgumentError("bad mixture sweep tag '" + std::string(tag) + "'");
        return mixture_sweep(n);
    }
    return family_sweep(parse_family_selector(tag));
}

struct TrainingRequest {
    TrainingDataRequest data{};
    TrainingConfig config{};
};

struct Scenario {
    std::string name = "custom";
    DetectorConfig detector{};
    std::vector<std::uint64_t> sample_sizes{1000};
    std::vector<SweepSpec> sweeps;
    std::size_t realizations = 1000;
    double nbar_lo = 1.0;
    double nbar_hi = 16.0;
    double p_lo = 0.0;
    double p_hi = 1.0;
    double threshold = kDefaultNetworkThreshold;
    double significance = kDefaultSignificance;
    int bootstrap = kDefaultBootstrap;
    int moment_order = 2;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool run_network = true;
    bool run_moments = true;
    /// Networks keyed by the sample size they score.
    std::map<std::uint64_t, NetworkModel> models;
    /// Trains a network for every sample size without one in `models`.
    std::optional<TrainingRequest> training;
};

struct ReportRow {
    std::string sweep;
    std::uint64_t m = 0;
    double eta = 1.0;
    double parameter = 0.0;  // n-bar, or p for mixture sweeps
    double nbar = 0.0;
    std::uint64_t stream_id = 0;
    int label = 0;
    double network_output = std::numeric_limits<double>::quiet_NaN();
    MomentsTestResult moments{};
    bool network_flag = false;
    bool moments_flag = false;
    std::string state;
};

struct SummaryRate {
    std::string sweep;
    std::uint64_t m = 0;
    int label = 0;
    std::size_t count = 0;
    double network_rate = 0.0;
    double moments_rate = 0.0;
};

struct ScenarioReport {
    std::string name;
    double threshold = kDefaultNetworkThreshold;
    double significance = kDefaultSignificance;
    std::vector<ReportRow> rows;
    std::map<std::uint64_t, TrainingResult> trained;

    /// Flag rates per (sweep, m): the false-positive rate for classical
    /// sweeps, the true-positive rate otherwise.
    std::vector<SummaryRate> summary() const {
        std::vector<SummaryRate> out;
        for (const auto& r : rows) {
            auto it = std::find_if(out.begin(), out.end(),
                                   [&](const SummaryRate& s) { return s.sweep == r.sweep && s.m == r.m; });
            if (it == out.end()) {
                out.push_back({r.sweep, r.m, r.label, 0, 0.0, 0.0});
                it = out.end() - 1;
            }
            ++it->count;
            it->network_rate += r.network_flag ? 1.0 : 0.0;
            it->moments_rate += r.moments_flag ? 1.0 : 0.0;
            if (r.label == 1) it->label = 1;
        }
        for (auto& s : out) {
            s.network_rate /= static_cast<double>(s.count);
            s.moments_rate /= static_cast<double>(s.count);
        }
        return out;
    }
};

/// Seed of the training data and network for one sample size.
inline std::uint64_t training_seed(std::uint64_t scenario_seed, std::uint64_t sample_size) {
    return stream_seed(scenario_seed ^ 0x7472616E696E67ULL, sample_size);
}

inline TrainingResult train_for(const TrainingRequest& request, const DetectorConfig& detector,
                                std::uint64_t sample_size, std::uint64_t seed) {
    TrainingDataRequest data = request.data;
    data.detector = detector;
    data.sample_size = sample_size;
    data.seed = seed;
    const auto [train_set, val_set] = generate_training_data(data);
    TrainingConfig cfg = request.config;
    cfg.seed = seed;
    auto result = train(to_examples(train_set), to_examples(val_set), cfg, detector);
    result.model.metadata["sample_size"] = std::to_string(sample_size);
    return result;
}

inline ScenarioReport run_scenario(const Scenario& sc) {
    ScenarioReport report{sc.name, sc.threshold, sc.significance, {}, {}};
    if (sc.realizations == 0 || sc.sweeps.empty() || sc.sample_sizes.empty()) return report;
    sc.detector.validate();
    if (!sc.run_network && !sc.run_moments) throw ConfigError("scenario runs neither the network nor the moments test");

    std::map<std::uint64_t, NetworkModel> models = sc.models;
    if (sc.run_network) {
        for (std::uint64_t m : sc.sample_sizes) {
            if (models.count(m)) continue;
            if (!sc.training) {
                throw ConfigError("no network for sample size " + std::to_string(m) + " and no training requested");
            }
            auto result = train_for(*sc.training, sc.detector, m, training_seed(sc.seed, m));
            models[m] = result.model;
            report.trained.emplace(m, std::move(result));
        }
        for (const auto& [m, model] : models) {
            if (model.input_dim() != sc.detector.bins()) {
                throw ConfigError("network input dimension " + std::to_string(model.input_dim()) +
                                  " does not match N + 1 = " + std::to_string(sc.detector.bins()));
            }
        }
    }

    struct Job {
        std::size_t m_index, sweep_index, i;
        double parameter;
    };
    std::vector<Job> jobs;
    for (std::size_t mi = 0; mi < sc.sample_sizes.size(); ++mi) {
        for (std::size_t si = 0; si < sc.sweeps.size(); ++si) {
            const auto& sw = sc.sweeps[si];
            double lo = sw.is_mixture() ? sc.p_lo : sc.nbar_lo;
            const double hi = sw.is_mixture() ? sc.p_hi : sc.nbar_hi;
            if (!sw.is_mixture() && sw.family.family == Family::npats) lo = std::max(lo, double(sw.family.added_photons));
            const auto grid = even_sweep(lo, hi, sc.realizations);
            for (std::size_t i = 0; i < grid.size(); ++i) jobs.push_back({mi, si, i, grid[i]});
        }
    }

    report.rows.resize(jobs.size());
    parallel_for(jobs.size(), sc.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const auto& sw = sc.sweeps[job.sweep_index];
        const std::uint64_t m = sc.sample_sizes[job.m_index];
        const std::uint64_t group = (job.m_index << 12) | job.sweep_index;

        StateSpec state;
        if (sw.is_mixture()) {
            state = Mixture{job.parameter, Coherent{static_cast<double>(sw.mixture_photons)}, Fock{sw.mixture_photons}};
        } else {
            state = std::visit([](const auto& p) -> StateSpec { return p; },
                               params_for_mean(sw.family.family, job.parameter, sw.family.added_photons));
        }
        const std::uint64_t sid = stream_key(purpose::histogram, group, job.i);
        const auto hist = sample_histogram(click_distribution(state, sc.detector), {m, sc.seed, sid});

        ReportRow& row = report.rows[j];
        row.sweep = sw.tag;
        row.m = m;
        row.eta = sc.detector.efficiency;
        row.parameter = job.parameter;
        row.nbar = sw.is_mixture() ? static_cast<double>(sw.mixture_photons) : job.parameter;
        row.stream_id = sid;
        row.label = is_nonclassical(state) ? 1 : 0;
        row.state = to_text(state);
        if (sc.run_network) {
            row.network_output = predict(models.at(m), hist);
            row.network_flag = row.network_output > sc.threshold;
        }
        if (sc.run_moments && m >= 2) {
            row.moments = moments_test(hist, sc.moment_order, sc.bootstrap, sc.seed,
                                       stream_key(purpose::bootstrap, group, job.i));
            row.moments_flag = row.moments.nonclassical(sc.significance);
        }
    });
    return report;
}

/// Standard sweeps: the four trained families, single- and two-photon-added
/// thermal states, and even coherent states.
inline std::vector<SweepSpec> standard_sweeps() {
    return {family_sweep({Family::coherent, 1}), family_sweep({Family::thermal, 1}), family_sweep({Family::fock, 1}),
            family_sweep({Family::squeezed, 1}), family_sweep({Family::npats, 1}),   family_sweep({Family::npats, 2}),
            family_sweep({Family::even_coherent, 1})};
}

/// Named presets: fig4 (eta = 1), fig5 (eta = 0.6), fig6 (mixture sweep).
inline Scenario preset_scenario(std::string_view name, std::uint64_t seed) {
    Scenario sc;
    sc.name = std::string(name);
    sc.seed = seed;
    sc.training = TrainingRequest{};
    if (name == "fig4" || name == "fig5") {
        sc.detector = {16, name == "fig4" ? 1.0 : 0.6};
        sc.sample_sizes = {1000, 100};
        sc.sweeps = standard_sweeps();
    } else if (name == "fig6") {
        sc.detector = {16, 1.0};
        sc.sample_sizes = {1000};
        sc.sweeps = {mixture_sweep(3), mixture_sweep(8), mixture_sweep(15)};
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    return sc;
}

// Linear-regression baseline on the training families.

struct BaselineConfig {
    DetectorConfig detector{16, 1.0};
    std::uint64_t sample_size = 1000;
    std::size_t points_per_family = 1000;
    std::size_t realizations = 100;
    double nbar_lo = 1.0;
    double nbar_hi = 16.0;
    std::uint64_t seed = 1;
};

struct BaselineRow {
    std::string family;
    int label = 0;
    double nbar = 0.0;
    std::uint64_t stream_id = 0;
    double prediction = 0.0;
};

struct BaselineReport {
    LinearModel model;
    std::vector<BaselineRow> rows;
};

inline BaselineReport run_fig3_baseline(const BaselineConfig& cfg) {
    TrainingDataRequest req;
    req.points_per_family = cfg.points_per_family;
    req.nbar_lo = cfg.nbar_lo;
    req.nbar_hi = cfg.nbar_hi;
    req.sample_size = cfg.sample_size;
    req.detector = cfg.detector;
    req.seed = training_seed(cfg.seed, cfg.sample_size);
    const auto [train_set, val_set] = generate_training_data(req);

    BaselineReport report{fit_linear(to_examples(train_set)), {}};
    for (std::size_t fi = 0; fi < kTrainingFamilies.size(); ++fi) {
        const auto& sel = kTrainingFamilies[fi];
        const auto points = generate_evaluation_set(sel, cfg.realizations, cfg.nbar_lo, cfg.nbar_hi, cfg.sample_size,
                                                    cfg.detector, cfg.seed, fi);
        for (const auto& p : points) {
            report.rows.push_back({sel.tag(), is_nonclassical(p.state) ? 1 : 0, p.nbar, p.stream_id,
                                   predict_linear(report.model, p.histogram)});
        }
    }
    return report;
}

/// Whether some threshold t (flag when prediction > t) reaches the given
/// recall on `positive_family` with zero flags on classical rows.
inline bool threshold_separates(const std::vector<BaselineRow>& rows, std::string_view positive_family,
                                double min_recall) {
    double max_classical = -std::numeric_limits<double>::infinity();
    std::size_t positives = 0;
    for (const auto& r : rows) {
        if (r.label == 0) max_classical = std::max(max_classical, r.prediction);
        if (r.family == positive_family) ++positives;
    }
    if (positives == 0) return false;
    // The loosest zero-false-positive threshold is the largest classical score.
    std::size_t hits = 0;
    for (const auto& r : rows) {
        if (r.family == positive_family && r.prediction > max_classical) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(positives) >= min_recall;
}

}  // namespace clicknet
