#pragma once

// Labeled click-histogram datasets for training, and deterministic sweeps for
// evaluation.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "clicknet/errors.hpp"
#include "clicknet/mlp.hpp"
#include "clicknet/rng.hpp"
#include "clicknet/sampling.hpp"
#include "clicknet/states.hpp"
#include "clicknet/textfmt.hpp"

namespace clicknet {

/// A pure family plus the NPATS photon number, e.g. "npats2".
struct FamilySelector {
    Family family = Family::coherent;
    int added_photons = 1;

    std::string tag() const {
        std::string t(family_tag(family));
        if (family == Family::npats) t += std::to_string(added_photons);
        return t;
    }

    friend bool operator==(const FamilySelector&, const FamilySelector&) = default;
};

inline FamilySelector parse_family_selector(std::string_view tag) {
    tag = text::trim(tag);
    if (tag.starts_with("npats")) {
        int n = 1;
        if (tag.size() > 5 && !text::parse_integer(tag.substr(5), n)) {
            throw ArgumentError("bad NPATS tag '" + std::string(tag) + "'");
        }
        return {Family::npats, n};
    }
    const Family f = parse_family(tag);
    if (f == Family::mixture) throw ArgumentError("mixtures are not a sweepable family");
    return {f, 1};
}

inline const std::vector<FamilySelector> kTrainingFamilies{
    {Family::coherent, 1}, {Family::thermal, 1}, {Family::fock, 1}, {Family::squeezed, 1}};

enum class Split { train, validation };

inline std::string_view split_tag(Split s) { return s == Split::train ? "train" : "validation"; }

struct LabeledRow {
    ClickHistogram histogram;
    int label = 0;
    StateSpec state;
    std::string family;  // selector tag
    double nbar = 0.0;
    std::uint64_t stream_id = 0;
};

struct LabeledDataset {
    Split split = Split::train;
    std::vector<LabeledRow> rows;

    std::size_t size() const { return rows.size(); }
};

struct TrainingDataRequest {
    std::vector<FamilySelector> families = kTrainingFamilies;
    std::size_t points_per_family = 1000;
    double nbar_lo = 1.0;
    double nbar_hi = 16.0;
    std::uint64_t sample_size = 1000;
    DetectorConfig detector{};
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
};

inline std::pair<LabeledDataset, LabeledDataset> generate_training_data(const TrainingDataRequest& req) {
    if (req.families.empty()) throw ArgumentError("at least one family is required");
    if (!(req.nbar_lo >= 0.0) || !(req.nbar_hi >= req.nbar_lo)) throw ArgumentError("invalid mean photon number range");
    if (!(req.train_fraction >= 0.0 && req.train_fraction <= 1.0)) throw ArgumentError("train fraction must lie in [0, 1]");
    req.detector.validate();

    std::vector<LabeledRow> rows;
    rows.reserve(req.families.size() * req.points_per_family);
    for (std::size_t fi = 0; fi < req.families.size(); ++fi) {
        const auto& sel = req.families[fi];
        Rng nbar_rng = derive_stream(req.seed, stream_key(purpose::nbar_draw, fi, 0));
        const double lo = sel.family == Family::npats ? std::max(req.nbar_lo, static_cast<double>(sel.added_photons))
                                                      : req.nbar_lo;
        for (std::size_t i = 0; i < req.points_per_family; ++i) {
            const double nbar = nbar_rng.uniform(lo, req.nbar_hi);
            const PureState pure = params_for_mean(sel.family, nbar, sel.added_photons);
            const StateSpec state = std::visit([](const auto& p) -> StateSpec { return p; }, pure);
            const auto dist = click_distribution(state, req.detector);
            const std::uint64_t sid = stream_key(purpose::histogram, fi, i);
            rows.push_back({sample_histogram(dist, {req.sample_size, req.seed, sid}), is_nonclassical(state) ? 1 : 0,
                            state, sel.tag(), nbar, sid});
        }
    }

    Rng split_rng = derive_stream(req.seed, stream_key(purpose::split, 0, 0));
    split_rng.shuffle(std::span<LabeledRow>(rows));
    const auto n_train = static_cast<std::size_t>(std::lround(req.train_fraction * static_cast<double>(rows.size())));

    std::pair<LabeledDataset, LabeledDataset> out{{Split::train, {}}, {Split::validation, {}}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        (i < n_train ? out.first : out.second).rows.push_back(std::move(rows[i]));
    }
    return out;
}

/// Evenly spaced points over [lo, hi], endpoints included.
inline std::vector<double> even_sweep(double lo, double hi, std::size_t count) {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return v;
}

struct EvaluationPoint {
    ClickHistogram histogram;
    StateSpec state;
    double nbar = 0.0;
    std::uint64_t stream_id = 0;
};

/// One histogram per evenly swept mean photon number. NPATS sweeps start at
/// the added photon number. `group` separates the streams of different sweeps.
inline std::vector<EvaluationPoint> generate_evaluation_set(const FamilySelector& sel, std::size_t realizations,
                                                            double nbar_lo, double nbar_hi, std::uint64_t sample_size,
                                                            const DetectorConfig& detector, std::uint64_t seed,
                                                            std::uint64_t group = 0) {
    if (realizations < 1) throw ArgumentError("at least one realization is required");
    const double lo = sel.family == Family::npats ? std::max(nbar_lo, static_cast<double>(sel.added_photons)) : nbar_lo;
    std::vector<EvaluationPoint> out;
    out.reserve(realizations);
    const auto grid = even_sweep(lo, nbar_hi, realizations);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const PureState pure = params_for_mean(sel.family, grid[i], sel.added_photons);
        const StateSpec state = std::visit([](const auto& p) -> StateSpec { return p; }, pure);
        const std::uint64_t sid = stream_key(purpose::histogram, group, i);
        out.push_back({sample_histogram(click_distribution(state, detector), {sample_size, seed, sid}), state, grid[i], sid});
    }
    return out;
}

inline Examples to_examples(const LabeledDataset& data) {
    Examples ex;
    for (const auto& r : data.rows) ex.add(r.histogram.freqs(), static_cast<double>(r.label));
    return ex;
}

// CSV layout: a version line, then
//   stream_id,m,N,eta,family,nbar,f_0..f_N,label,split,state

inline constexpr std::string_view kDatasetVersionLine = "# clicknet-dataset v1";

inline std::string dataset_header(int n_detectors) {
    return histogram_csv_header(n_detectors) + ",label,split,state";
}

inline void write_dataset(const LabeledDataset& data, std::ostream& out, int n_detectors = 16) {
    if (!data.rows.empty()) n_detectors = data.rows.front().histogram.config().n_detectors;
    out << kDatasetVersionLine << "\n" << dataset_header(n_detectors) << "\n";
    for (const auto& r : data.rows) {
        out << histogram_csv_row(r.histogram, r.stream_id, r.family, r.nbar) << "," << r.label << ","
            << split_tag(data.split) << "," << to_text(r.state) << "\n";
    }
}

inline void write_dataset(const LabeledDataset& data, const std::string& path, int n_detectors = 16) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    write_dataset(data, out, n_detectors);
}

inline LabeledDataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kDatasetVersionLine) throw LoadError("missing dataset version line");
    if (!std::getline(in, line)) throw LoadError("missing dataset header");
    const auto header = text::split(text::trim(line), ',');
    if (header.size() < 10) throw LoadError("dataset header too short");
    const int n_detectors = static_cast<int>(header.size()) - 10;
    if (std::string(text::trim(line)) != dataset_header(n_detectors)) throw LoadError("dataset header mismatch");

    LabeledDataset data;
    bool split_seen = false;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cols = text::split(text::trim(line), ',');
        const std::string where = " on line " + std::to_string(line_no);
        if (cols.size() != header.size()) throw LoadError("wrong column count" + where);
        LabeledRow row;
        std::uint64_t m = 0;
        int N = 0;
        double eta = 0.0;
        if (!text::parse_integer(cols[0], row.stream_id) || !text::parse_integer(cols[1], m) ||
            !text::parse_integer(cols[2], N) || !text::parse_double(cols[3], eta) ||
            !text::parse_double(cols[5], row.nbar)) {
            throw LoadError("bad numeric field" + where);
        }
        if (N != n_detectors) throw LoadError("detector count disagrees with header" + where);
        row.family = std::string(text::trim(cols[4]));
        std::vector<double> freqs(n_detectors + 1);
        for (int k = 0; k <= n_detectors; ++k) {
            if (!text::parse_double(cols[6 + k], freqs[k])) throw LoadError("bad frequency" + where);
        }
        try {
            row.histogram = histogram_from_freqs(freqs, m, DetectorConfig{N, eta});
            row.state = parse_state(cols[9 + n_detectors]);
        } catch (const LoadError& e) {
            throw LoadError(e.what() + where);
        } catch (const ArgumentError& e) {
            throw LoadError(e.what() + where);
        }
        if (!text::parse_integer(cols[7 + n_detectors], row.label) || (row.label != 0 && row.label != 1)) {
            throw LoadError("label must be 0 or 1" + where);
        }
        const auto split = text::trim(cols[8 + n_detectors]);
        Split s;
        if (split == "train") s = Split::train;
        else if (split == "validation") s = Split::validation;
        else throw LoadError("unknown split" + where);
        if (split_seen && s != data.split) throw LoadError("mixed splits in one dataset file" + where);
        data.split = s;
        split_seen = true;
        data.rows.push_back(std::move(row));
    }
    return data;
}

inline LabeledDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open dataset '" + path + "'");
    return read_dataset(in);
}

}  // namespace clicknet
