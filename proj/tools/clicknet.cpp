// clicknet: simulate click statistics, train the classifier, run the moments
// test, and reproduce the figure scenarios.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "clicknet/clicknet.hpp"

namespace fs = std::filesystem;
using namespace clicknet;

namespace {

struct Options {
    std::uint64_t seed = 1;
    int detectors = 16;
    double eta = 1.0;
    std::uint64_t samples = 1000;
    std::string model;
    std::string out;
    unsigned threads = 1;
    int bootstrap = kDefaultBootstrap;
    double threshold = kDefaultNetworkThreshold;
    double significance = kDefaultSignificance;
    int order = 2;
    std::optional<std::size_t> realizations;

    // subcommand arguments
    std::string state;
    std::string dataset;
    std::string figure;
    std::string report;
    std::string kind = "network";
    std::size_t points = 1000;
    std::size_t max_epochs = 2000;
    std::size_t patience = 50;
};

DetectorConfig detector(const Options& o) {
    DetectorConfig d{o.detectors, o.eta};
    d.validate();
    return d;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open '" + path.string() + "' for writing");
    out << content;
}

/// Writes to --out/<name> when --out is set, else to stdout.
void emit(const Options& o, const std::string& name, const std::string& content) {
    if (o.out.empty()) {
        std::cout << content;
        return;
    }
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / name, content);
    std::cerr << "wrote " << (fs::path(o.out) / name).string() << "\n";
}

fs::path out_dir(const Options& o) {
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    return dir;
}

/// Histograms either from --dataset or sampled from --state.
LabeledDataset input_histograms(const Options& o) {
    if (!o.dataset.empty() && !o.state.empty()) throw ConfigError("give either --dataset or --state, not both");
    if (!o.dataset.empty()) return read_dataset(o.dataset);
    if (o.state.empty()) throw ConfigError("need --dataset or --state");
    const StateSpec state = parse_state(o.state);
    const auto dist = click_distribution(state, detector(o));
    LabeledDataset data;
    const std::size_t count = o.realizations.value_or(1);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t sid = stream_key(purpose::histogram, 0, i);
        data.rows.push_back({sample_histogram(dist, {o.samples, o.seed, sid}), is_nonclassical(state) ? 1 : 0, state,
                             std::string(family_tag(family_of(state))), mean_photon_number(state), sid});
    }
    return data;
}

int run_simulate(const Options& o) {
    if (o.state.empty()) throw ConfigError("simulate needs --state");
    const StateSpec state = parse_state(o.state);
    const auto dist = click_distribution(state, detector(o));
    std::string csv = "k,p_k\n";
    for (std::size_t k = 0; k < dist.size(); ++k) csv += std::to_string(k) + "," + text::format_double(dist.probs[k]) + "\n";
    emit(o, "distribution.csv", csv);
    if (o.realizations && *o.realizations > 0) {
        std::ostringstream ss;
        write_dataset(input_histograms(o), ss, o.detectors);
        emit(o, "histograms.csv", ss.str());
    }
    return 0;
}

int run_train(const Options& o) {
    TrainingDataRequest req;
    req.points_per_family = o.points;
    req.sample_size = o.samples;
    req.detector = detector(o);
    req.seed = o.seed;
    const auto [train_set, val_set] = generate_training_data(req);
    TrainingConfig cfg;
    cfg.seed = o.seed;
    cfg.max_epochs = o.max_epochs;
    cfg.patience = o.patience;
    std::cerr << "training on " << train_set.size() << " rows, validating on " << val_set.size() << "\n";
    auto result = train(to_examples(train_set), to_examples(val_set), cfg, req.detector);
    result.model.metadata["sample_size"] = std::to_string(o.samples);
    const fs::path dir = out_dir(o);
    save_model(result.model, (dir / "model.json").string());
    write_file(dir / "history.csv", history_csv(result.history));
    write_dataset(train_set, (dir / "train.csv").string(), o.detectors);
    write_dataset(val_set, (dir / "validation.csv").string(), o.detectors);
    std::cerr << "best epoch " << result.best_epoch << ", validation MSE " << text::format_double(result.best_val_mse)
              << "; wrote " << dir.string() << "\n";
    return 0;
}

int run_evaluate(const Options& o) {
    if (o.model.empty()) throw ConfigError("evaluate needs --model");
    const auto model = load_model(o.model);
    const auto data = input_histograms(o);
    std::string csv = "stream_id,family,nbar,label,network_output,flagged\n";
    for (const auto& r : data.rows) {
        const double y = predict(model, r.histogram);
        csv += std::to_string(r.stream_id) + "," + r.family + "," + text::format_double(r.nbar) + "," +
               std::to_string(r.label) + "," + text::format_double(y) + "," + (y > o.threshold ? "1" : "0") + "\n";
    }
    emit(o, "evaluation.csv", csv);
    return 0;
}

int run_moments(const Options& o) {
    const auto data = input_histograms(o);
    std::string csv = moments_csv_header() + "\n";
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& r = data.rows[i];
        const auto res =
            moments_test(r.histogram, o.order, o.bootstrap, o.seed, stream_key(purpose::bootstrap, 0, r.stream_id));
        csv += moments_csv_row(r.family, r.nbar, r.histogram.sample_size(), r.histogram.config().efficiency, res,
                               o.significance) +
               "\n";
    }
    emit(o, "moments.csv", csv);
    return 0;
}

int run_reproduce(const Options& o, const CLI::App& app) {
    const fs::path dir = out_dir(o);
    if (o.figure == "fig3") {
        BaselineConfig cfg;
        cfg.detector = detector(o);
        cfg.sample_size = o.samples;
        cfg.seed = o.seed;
        cfg.points_per_family = o.points;
        if (o.realizations) cfg.realizations = *o.realizations;
        const auto report = run_fig3_baseline(cfg);
        write_file(dir / "baseline.csv", baseline_csv(report));
        emit_plot(report, (dir / "linear.svg").string());
        std::cerr << "wrote " << dir.string() << "\n";
        return 0;
    }

    Scenario sc = preset_scenario(o.figure, o.seed);
    // Preset values stand unless a flag or config entry overrides them.
    auto given = [&app](const char* name) { return app.count(name) > 0; };
    if (given("--detectors") || given("--eta")) sc.detector = {given("--detectors") ? o.detectors : sc.detector.n_detectors,
                                                               given("--eta") ? o.eta : sc.detector.efficiency};
    if (given("--samples")) sc.sample_sizes = {o.samples};
    if (o.realizations) sc.realizations = *o.realizations;
    sc.threads = o.threads;
    sc.bootstrap = o.bootstrap;
    sc.threshold = o.threshold;
    sc.significance = o.significance;
    sc.moment_order = o.order;
    sc.training->config.max_epochs = o.max_epochs;
    sc.training->config.patience = o.patience;
    sc.training->data.points_per_family = o.points;
    if (!o.model.empty()) {
        const auto model = load_model(o.model);
        for (std::uint64_t m : sc.sample_sizes) sc.models[m] = model;
    }
    sc.detector.validate();

    std::cerr << "running " << sc.name << ": " << sc.sweeps.size() << " sweeps x " << sc.sample_sizes.size()
              << " sample sizes x " << sc.realizations << " realizations\n";
    const auto report = run_scenario(sc);
    write_file(dir / "report.csv", report_csv(report));
    write_file(dir / "summary.csv", summary_csv(report));
    for (const auto& [m, result] : report.trained) {
        save_model(result.model, (dir / ("model_m" + std::to_string(m) + ".json")).string());
        write_file(dir / ("history_m" + std::to_string(m) + ".csv"), history_csv(result.history));
    }
    emit_plot(report, PlotKind::network, (dir / "network.svg").string());
    emit_plot(report, PlotKind::moments, (dir / "moments.svg").string());
    std::cerr << "wrote " << dir.string() << "\n";
    return 0;
}

int run_plot(const Options& o) {
    if (o.report.empty()) throw ConfigError("plot needs --report");
    std::ifstream in(o.report, std::ios::binary);
    if (!in) throw LoadError("cannot open report '" + o.report + "'");
    auto report = read_report_csv(in);
    report.threshold = o.threshold;
    report.significance = o.significance;
    const PlotKind kind = parse_plot_kind(o.kind);
    emit_plot(report, kind, (out_dir(o) / (o.kind + ".svg")).string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Click-counting nonclassicality: simulation, classifier, and moments test"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key = value file; command-line flags take precedence");

    Options o;
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--detectors", o.detectors, "number of on-off detectors N");
    app.add_option("--eta", o.eta, "detector efficiency in (0, 1]");
    app.add_option("--samples", o.samples, "shots per histogram m");
    app.add_option("--model", o.model, "network model file");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--threads", o.threads, "worker threads for scenarios");
    app.add_option("--bootstrap", o.bootstrap, "bootstrap replicates for the moments test");
    app.add_option("--threshold", o.threshold, "network decision threshold");
    app.add_option("--significance", o.significance, "moments-test significance threshold");
    app.add_option("--order", o.order, "moment matrix order K (even)");
    app.add_option("--realizations", o.realizations, "histograms per sweep (or per --state)");
    app.add_option("--points", o.points, "training points per family");
    app.add_option("--max-epochs", o.max_epochs, "training epoch cap");
    app.add_option("--patience", o.patience, "early-stopping patience");

    auto* simulate = app.add_subcommand("simulate", "exact click distribution, optionally sampled histograms");
    simulate->add_option("--state", o.state, "state, e.g. 'thermal{n_th=4}'")->required();

    app.add_subcommand("train", "generate training data and train a network");

    auto* evaluate = app.add_subcommand("evaluate", "score histograms with a trained network");
    evaluate->add_option("--state", o.state, "state to sample");
    evaluate->add_option("--dataset", o.dataset, "dataset CSV");

    auto* moments = app.add_subcommand("moments", "matrix-of-moments test with bootstrap error");
    moments->add_option("--state", o.state, "state to sample");
    moments->add_option("--dataset", o.dataset, "dataset CSV");

    auto* reproduce = app.add_subcommand("reproduce", "run a figure scenario");
    reproduce->add_option("figure", o.figure, "fig3 | fig4 | fig5 | fig6")
        ->required()
        ->check(CLI::IsMember({"fig3", "fig4", "fig5", "fig6"}));

    auto* plot = app.add_subcommand("plot", "render a scenario report as SVG");
    plot->add_option("--report", o.report, "report CSV")->required();
    plot->add_option("--kind", o.kind, "network | moments")->check(CLI::IsMember({"network", "moments"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(o);
        if (app.got_subcommand("train")) return run_train(o);
        if (evaluate->parsed()) return run_evaluate(o);
        if (moments->parsed()) return run_moments(o);
        if (reproduce->parsed()) return run_reproduce(o, app);
        if (plot->parsed()) return run_plot(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const LoadError& e) {
        std::cerr << "load error: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
