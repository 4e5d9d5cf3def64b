#pragma once

// Versioned JSON model files. Doubles are written in shortest round-trip
// form, so a save/load cycle reproduces every parameter bit for bit.
//
//   {"format": "clicknet-mlp", "version": 1, "layer_dims": [17, 50, 50, 50, 1],
//    "hidden_activation": "relu", "output_activation": "sigmoid",
//    "weights": [[...row-major...], ...], "biases": [[...], ...],
//    "metadata": {"seed": "...", ...}}

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "clicknet/errors.hpp"
#include "clicknet/mlp.hpp"

namespace clicknet {

inline constexpr int kModelFormatVersion = 1;

inline std::string model_to_json(const NetworkModel& model) {
    model.validate();
    nlohmann::json j;
    j["format"] = "clicknet-mlp";
    j["version"] = kModelFormatVersion;
    j["layer_dims"] = model.layer_dims;
    j["hidden_activation"] = activation_tag(model.hidden_activation);
    j["output_activation"] = activation_tag(model.output_activation);
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (const auto& l : model.layers) {
        j["weights"].push_back(l.weights);
        j["biases"].push_back(l.bias);
    }
    j["metadata"] = model.metadata;
    return j.dump(1) + "\n";
}

inline NetworkModel model_from_json(const std::string& document) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "clicknet-mlp") throw LoadError("not a clicknet model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) throw LoadError("unsupported model version " + std::to_string(version));

        NetworkModel model;
        model.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        model.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
        model.output_activation = parse_activation(j.at("output_activation").get<std::string>());
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (!weights.is_array() || !biases.is_array() || weights.size() != biases.size() ||
            weights.size() + 1 != model.layer_dims.size()) {
            throw LoadError("weights/biases do not match layer_dims");
        }
        for (std::size_t i = 0; i < weights.size(); ++i) {
            DenseLayer l;
            l.inputs = model.layer_dims[i];
            l.outputs = model.layer_dims[i + 1];
            // A NaN written by a foreign tool shows up as null and fails here.
            l.weights = weights[i].get<std::vector<double>>();
            l.bias = biases[i].get<std::vector<double>>();
            model.layers.push_back(std::move(l));
        }
        if (j.contains("metadata")) model.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        model.validate();
        return model;
    } catch (const LoadError&) {
        throw;
    } catch (const std::exception& e) {
        throw LoadError(std::string("model file violates the schema: ") + e.what());
    }
}

inline void save_model(const NetworkModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    out << model_to_json(model);
    if (!out) throw ArgumentError("failed writing '" + path + "'");
}

inline NetworkModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace clicknet
