#include "jslight/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jslight/category.hpp"
#include "jslight/error.hpp"

namespace jslight {

using nlohmann::ordered_json;

std::string model_to_json(const ModelParameters& model) {
    validate(model);
    ordered_json j;
    j["version"] = kModelFormatVersion;
    j["vocab_version"] = model.vocab_version;
    ordered_json enc = ordered_json::object();
    for (auto c : kAllCategories) enc[std::string(to_string(c))] = index_of(c);
    j["category_encoding"] = enc;
    j["layer_dims"] = model.layer_dims;
    ordered_json layers = ordered_json::array();
    for (const auto& l : model.layers) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        }
        std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back({{"weights", std::move(w)}, {"bias", std::move(b)}});
    }
    j["layers"] = std::move(layers);
    j["threshold_default"] = model.threshold_default;
    j["vocabulary"] = model.vocabulary;
    return j.dump();
}

ModelParameters model_from_json(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
    ModelParameters m;
    try {
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw Error("unsupported model format version " + j.at("version").dump());
        }
        const auto& enc = j.at("category_encoding");
        for (auto c : kAllCategories) {
            const auto name = std::string(to_string(c));
            if (!enc.contains(name) || enc.at(name).get<std::size_t>() != index_of(c)) {
                throw Error("model category encoding differs for \"" + name + "\"");
            }
        }
        m.vocab_version = j.at("vocab_version").get<std::string>();
        m.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        m.threshold_default = j.value("threshold_default", 0.5);
        if (j.contains("vocabulary")) m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        const auto& layers = j.at("layers");
        if (m.layer_dims.size() < 2 || layers.size() + 1 != m.layer_dims.size()) {
            throw Error("model layer count does not match layer_dims");
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto in = static_cast<Eigen::Index>(m.layer_dims[i]);
            const auto out = static_cast<Eigen::Index>(m.layer_dims[i + 1]);
            const auto w = layers[i].at("weights").get<std::vector<double>>();
            const auto b = layers[i].at("bias").get<std::vector<double>>();
            if (w.size() != static_cast<std::size_t>(in * out) || b.size() != static_cast<std::size_t>(out)) {
                throw Error("layer " + std::to_string(i) + " has the wrong number of values");
            }
            DenseLayer layer{Eigen::MatrixXd(in, out), Eigen::VectorXd(out)};
            for (Eigen::Index r = 0; r < in; ++r) {
                for (Eigen::Index c = 0; c < out; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * out + c)];
            }
            for (Eigen::Index c = 0; c < out; ++c) layer.bias(c) = b[static_cast<std::size_t>(c)];
            m.layers.push_back(std::move(layer));
        }
    } catch (const ordered_json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
    validate(m);
    return m;
}

void save_model(const ModelParameters& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model file " + path.string());
    out << model_to_json(model) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

ModelParameters load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace jslight
