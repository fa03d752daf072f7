#include "tristage/gbdt.hpp"

#include "tristage/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace tristage::gbdt {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "tristage-gbdt";

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorKind::Persistence, "model document: " + what);
}

double finite_number(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) malformed(std::string("missing numeric field '") + key + "'");
    const double v = it->get<double>();
    if (!std::isfinite(v)) malformed(std::string("field '") + key + "' is not finite");
    return v;
}

std::int64_t integer(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) malformed(std::string("missing integer field '") + key + "'");
    return it->get<std::int64_t>();
}

RegressionTree tree_from_json(const json& doc, std::size_t feature_count) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) malformed("tree without node array");
    RegressionTree tree;
    const auto& nodes = doc["nodes"];
    if (nodes.empty()) malformed("tree with no nodes");
    const auto count = static_cast<std::int64_t>(nodes.size());
    for (std::int64_t i = 0; i < count; ++i) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (!n.is_object() || !n.contains("kind") || !n["kind"].is_string()) malformed("node without kind tag");
        TreeNode node;
        const auto kind = n["kind"].get<std::string>();
        if (kind == "leaf") {
            node.weight = finite_number(n, "weight");
        } else if (kind == "split") {
            node.is_leaf = false;
            const auto feature = integer(n, "feature");
            if (feature < 0 || static_cast<std::size_t>(feature) >= feature_count) malformed("split feature out of range");
            node.split_feature = static_cast<int>(feature);
            node.threshold = finite_number(n, "threshold");
            const auto left = integer(n, "left");
            const auto right = integer(n, "right");
            // Children follow their parent, so the node graph is acyclic.
            if (left <= i || right <= i || left >= count || right >= count || left == right) {
                malformed("split children out of range");
            }
            node.left = static_cast<int>(left);
            node.right = static_cast<int>(right);
        } else {
            malformed("unknown node kind '" + kind + "'");
        }
        tree.nodes.push_back(node);
    }
    tree.depth = static_cast<int>(integer(doc, "depth"));
    return tree;
}

} // namespace

std::string save_model(const GbdtModel& model) {
    json trees = json::array();
    for (const auto& t : model.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf) {
                nodes.push_back({{"kind", "leaf"}, {"weight", n.weight}});
            } else {
                nodes.push_back({{"kind", "split"},
                                 {"feature", n.split_feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right}});
            }
        }
        trees.push_back({{"depth", t.depth}, {"nodes", std::move(nodes)}});
    }
    json doc = {{"format", kFormat},
                {"version", kModelVersion},
                {"base_score", model.base_score},
                {"learning_rate", model.learning_rate},
                {"feature_count", model.feature_count},
                {"trees", std::move(trees)}};
    return doc.dump(1) + "\n";
}

GbdtModel load_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        malformed(std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) malformed("top level is not an object");
    if (!doc.contains("version")) malformed("missing version tag");
    if (doc.contains("format") && doc["format"] != kFormat) malformed("unexpected format tag");
    const auto version = integer(doc, "version");
    if (version != kModelVersion) malformed("unsupported version " + std::to_string(version));

    GbdtModel model;
    model.base_score = finite_number(doc, "base_score");
    model.learning_rate = finite_number(doc, "learning_rate");
    const auto features = integer(doc, "feature_count");
    if (features < 0) malformed("negative feature_count");
    model.feature_count = static_cast<std::size_t>(features);
    if (!doc.contains("trees") || !doc["trees"].is_array()) malformed("missing tree array");
    for (const auto& t : doc["trees"]) model.trees.push_back(tree_from_json(t, model.feature_count));
    return model;
}

void save_model_file(const GbdtModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << save_model(model);
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

GbdtModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

} // namespace tristage::gbdt
