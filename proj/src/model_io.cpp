#include "traceforest/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "traceforest/errors.hpp"
#include "traceforest/strings.hpp"

using ordered_json = nlohmann::ordered_json;

namespace traceforest {

namespace {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "traceforest-model";

ordered_json tree_to_json(const Tree& tree, std::size_t at) {
    const TreeNode& node = tree.nodes[at];
    ordered_json j;
    if (node.feature_index < 0) {
        j["value"] = node.value;
        j["n"] = node.n_samples;
        return j;
    }
    j["feature"] = node.feature_index;
    j["threshold"] = node.threshold;
    j["gain"] = node.sse_reduction;
    j["n"] = node.n_samples;
    j["left"] = tree_to_json(tree, static_cast<std::size_t>(node.left));
    j["right"] = tree_to_json(tree, static_cast<std::size_t>(node.right));
    return j;
}

std::int32_t tree_from_json(const ordered_json& j, Tree& tree) {
    TreeNode node;
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (j.contains("feature")) {
        tree.nodes[static_cast<std::size_t>(id)].feature_index = j.at("feature").get<std::int32_t>();
        tree.nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
        tree.nodes[static_cast<std::size_t>(id)].sse_reduction = j.value("gain", 0.0);
        tree.nodes[static_cast<std::size_t>(id)].n_samples = j.value("n", 0u);
        const std::int32_t left = tree_from_json(j.at("left"), tree);
        const std::int32_t right = tree_from_json(j.at("right"), tree);
        tree.nodes[static_cast<std::size_t>(id)].left = left;
        tree.nodes[static_cast<std::size_t>(id)].right = right;
    } else {
        tree.nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
        tree.nodes[static_cast<std::size_t>(id)].n_samples = j.value("n", 0u);
    }
    return id;
}

ordered_json forest_config_to_json(const ForestConfig& config) {
    ordered_json j;
    j["n_estimators"] = config.n_estimators;
    if (config.max_depth) j["max_depth"] = *config.max_depth;
    else j["max_depth"] = nullptr;
    j["min_samples_split"] = config.min_samples_split;
    j["min_samples_leaf"] = config.min_samples_leaf;
    j["max_features"] = config.max_features.to_text();
    j["bootstrap_size"] = config.bootstrap_size;
    j["seed"] = config.seed;
    return j;
}

ForestConfig forest_config_from_json(const ordered_json& j) {
    ForestConfig config;
    config.n_estimators = j.at("n_estimators").get<std::size_t>();
    if (!j.at("max_depth").is_null()) config.max_depth = j.at("max_depth").get<std::size_t>();
    else config.max_depth.reset();
    config.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    config.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    config.max_features = MaxFeatures::from_text(j.at("max_features").get<std::string>());
    config.bootstrap_size = j.at("bootstrap_size").get<double>();
    config.seed = j.at("seed").get<std::uint64_t>();
    return config;
}

ordered_json container(const std::string& kind, const std::vector<std::string>& names) {
    ordered_json doc;
    doc["format"] = kModelFormat;
    doc["version"] = kModelVersion;
    doc["kind"] = kind;
    doc["feature_names"] = names;
    doc["fingerprint"] = to_hex16(schema_fingerprint(names));
    return doc;
}

void write_doc(const ordered_json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path);
}

ordered_json read_container(const std::string& path, std::vector<std::string>& names_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": malformed model file: " + e.what());
    }
    if (doc.value("format", "") != kModelFormat)
        throw SchemaError(path + ": not a model file");
    if (doc.value("version", -1) != kModelVersion)
        throw SchemaError(path + ": unsupported model version " +
                          doc.value("version", ordered_json(nullptr)).dump());
    names_out = doc.at("feature_names").get<std::vector<std::string>>();
    if (doc.at("fingerprint").get<std::string>() != to_hex16(schema_fingerprint(names_out)))
        throw SchemaError(path + ": fingerprint does not match feature names");
    return doc;
}

} // namespace

void save_model(const RandomForestModel& model, const std::string& path) {
    ordered_json doc = container("forest", model.feature_names);
    doc["config"] = forest_config_to_json(model.config);
    doc["importances"] = model.importances;
    ordered_json trees = ordered_json::array();
    for (const auto& tree : model.trees) trees.push_back(tree_to_json(tree, 0));
    doc["trees"] = std::move(trees);
    write_doc(doc, path);
}

void save_model(const LinearModel& model, const std::string& path) {
    ordered_json doc = container("linear", model.feature_names);
    doc["coefficients"] = model.coefficients;
    doc["intercept"] = model.intercept;
    write_doc(doc, path);
}

void save_model(const GBTModel& model, const std::string& path) {
    ordered_json doc = container("gbt", model.feature_names);
    ordered_json config;
    config["n_rounds"] = model.config.n_rounds;
    if (model.config.max_depth) config["max_depth"] = *model.config.max_depth;
    else config["max_depth"] = nullptr;
    config["learning_rate"] = model.config.learning_rate;
    doc["config"] = std::move(config);
    doc["initial"] = model.initial;
    doc["learning_rate"] = model.learning_rate;
    ordered_json trees = ordered_json::array();
    for (const auto& tree : model.trees) trees.push_back(tree_to_json(tree, 0));
    doc["trees"] = std::move(trees);
    write_doc(doc, path);
}

AnyModel load_model(const std::string& path) {
    std::vector<std::string> names;
    ordered_json doc = read_container(path, names);
    const std::string kind = doc.value("kind", "");
    try {
        if (kind == "forest") {
            RandomForestModel model;
            model.feature_names = names;
            model.schema_fp = schema_fingerprint(names);
            model.config = forest_config_from_json(doc.at("config"));
            model.importances = doc.at("importances").get<std::vector<double>>();
            for (const auto& tj : doc.at("trees")) {
                Tree tree;
                tree_from_json(tj, tree);
                model.trees.push_back(std::move(tree));
            }
            if (model.trees.empty()) throw SchemaError(path + ": model holds no trees");
            return model;
        }
        if (kind == "linear") {
            LinearModel model;
            model.feature_names = names;
            model.schema_fp = schema_fingerprint(names);
            model.coefficients = doc.at("coefficients").get<std::vector<double>>();
            model.intercept = doc.at("intercept").get<double>();
            if (model.coefficients.size() != names.size())
                throw SchemaError(path + ": coefficient count does not match features");
            return model;
        }
        if (kind == "gbt") {
            GBTModel model;
            model.feature_names = names;
            model.schema_fp = schema_fingerprint(names);
            const auto& config = doc.at("config");
            model.config.n_rounds = config.at("n_rounds").get<std::size_t>();
            if (!config.at("max_depth").is_null())
                model.config.max_depth = config.at("max_depth").get<std::size_t>();
            else
                model.config.max_depth.reset();
            model.config.learning_rate = config.at("learning_rate").get<double>();
            model.initial = doc.at("initial").get<double>();
            model.learning_rate = doc.at("learning_rate").get<double>();
            for (const auto& tj : doc.at("trees")) {
                Tree tree;
                tree_from_json(tj, tree);
                model.trees.push_back(std::move(tree));
            }
            return model;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": malformed model body: " + e.what());
    }
    throw SchemaError(path + ": unknown model kind '" + kind + "'");
}

RandomForestModel load_forest_model(const std::string& path) {
    AnyModel any = load_model(path);
    if (auto* forest = std::get_if<RandomForestModel>(&any)) return std::move(*forest);
    throw SchemaError(path + ": expected a random forest model, found " +
                      model_kind_name(any));
}

std::string model_kind_name(const AnyModel& model) {
    if (std::holds_alternative<RandomForestModel>(model)) return "forest";
    if (std::holds_alternative<LinearModel>(model)) return "linear";
    return "gbt";
}

const std::vector<std::string>& model_feature_names(const AnyModel& model) {
    return std::visit([](const auto& m) -> const std::vector<std::string>& {
        return m.feature_names;
    }, model);
}

std::vector<double> predict_matrix(const AnyModel& model, const FeatureMatrix& m) {
    return std::visit([&](const auto& concrete) { return predict_matrix(concrete, m); }, model);
}

} // namespace traceforest
