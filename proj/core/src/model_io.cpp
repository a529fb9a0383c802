#include "ccb/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace ccb {

namespace {

using nlohmann::json;

LinkFunction link_from_json(const json& j) {
  if (j.is_null()) return LinkFunction::identity();
  if (j.is_string()) {
    const auto kind = j.get<std::string>();
    if (kind == "identity") return LinkFunction::identity();
    if (kind == "logistic") return LinkFunction::logistic(1.0, 0.0);
    throw std::invalid_argument("graph document: unknown link '" + kind + "'");
  }
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") return LinkFunction::identity(j.value("l2", 0.0));
  if (kind == "logistic") {
    return LinkFunction::logistic(j.value("scale", 1.0), j.value("offset", 0.0));
  }
  if (kind == "tabulated") {
    return LinkFunction::tabulated(j.at("knots").get<std::vector<double>>(),
                                   j.at("values").get<std::vector<double>>(), j.value("l2", 0.0));
  }
  throw std::invalid_argument("graph document: unknown link kind '" + kind + "'");
}

json link_to_json(const LinkFunction& f) {
  switch (f.kind()) {
    case LinkKind::identity:
      if (f.l2() == 0.0) return "identity";
      return {{"kind", "identity"}, {"l2", f.l2()}};
    case LinkKind::logistic:
      return {{"kind", "logistic"}, {"scale", f.scale()}, {"offset", f.offset()}};
    case LinkKind::tabulated:
      return {{"kind", "tabulated"}, {"knots", f.knots()}, {"values", f.values()}, {"l2", f.l2()}};
  }
  return "identity";
}

NoiseSpec noise_from_json(const json& j) {
  if (j.is_null()) return {};
  const auto kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "none") return {};
  if (kind == "truncated-gaussian") {
    return {NoiseKind::truncated_gaussian, j.is_object() ? j.value("stddev", 0.0) : 0.0};
  }
  throw std::invalid_argument("graph document: unknown noise kind '" + kind + "'");
}

json noise_to_json(const NoiseSpec& noise) {
  if (noise.kind == NoiseKind::none) return {{"kind", "none"}};
  return {{"kind", "truncated-gaussian"}, {"stddev", noise.stddev}};
}

}  // namespace

CausalModel model_from_json(const json& doc) {
  const auto& jnodes = doc.at("nodes");
  if (!jnodes.is_array() || jnodes.empty()) {
    throw std::invalid_argument("graph document: 'nodes' must be a non-empty list");
  }

  std::vector<Node> declared;
  for (const auto& jn : jnodes) {
    Node node;
    node.name = jn.at("name").get<std::string>();
    node.hidden = jn.value("hidden", false);
    node.constant = jn.value("constant", false);
    node.link = link_from_json(jn.contains("link") ? jn.at("link") : json());
    node.noise = noise_from_json(jn.contains("noise") ? jn.at("noise") : json());
    declared.push_back(std::move(node));
  }
  std::stable_partition(declared.begin(), declared.end(), [](const Node& n) { return n.constant; });

  std::map<std::string, NodeId> index;
  for (NodeId id = 0; id < declared.size(); ++id) {
    if (!index.emplace(declared[id].name, id).second) {
      throw std::invalid_argument("graph document: duplicate node '" + declared[id].name + "'");
    }
  }
  auto lookup = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw std::invalid_argument("graph document: unknown node '" + name + "'");
    return it->second;
  };

  if (doc.contains("edges")) {
    for (const auto& je : doc.at("edges")) {
      const NodeId from = lookup(je.at("from").get<std::string>());
      const NodeId to = lookup(je.at("to").get<std::string>());
      declared[to].parents.push_back(from);
      declared[to].theta.push_back(je.at("weight").get<double>());
    }
  }
  const NodeId target = lookup(doc.at("target").get<std::string>());
  return CausalModel(doc.value("name", std::string("graph")), std::move(declared), target);
}

json model_to_json(const CausalModel& model) {
  json nodes = json::array();
  json edges = json::array();
  for (const Node& n : model.nodes()) {
    json jn{{"name", n.name}};
    if (n.constant) {
      jn["constant"] = true;
      if (n.hidden) jn["hidden"] = true;
    } else {
      jn["hidden"] = n.hidden;
      jn["link"] = link_to_json(n.link);
      jn["noise"] = noise_to_json(n.noise);
    }
    nodes.push_back(std::move(jn));
  }
  for (const Node& n : model.nodes()) {
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      edges.push_back({{"from", model.node(n.parents[k]).name}, {"to", n.name}, {"weight", n.theta[k]}});
    }
  }
  return {{"name", model.name()},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"target", model.node(model.target()).name}};
}

CausalModel read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("graph file '" + path.string() + "': " + e.what());
  }
  return model_from_json(doc);
}

void write_model_file(const CausalModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file '" + path.string() + "'");
  out << model_to_json(model).dump(2) << '\n';
}

CausalModel load_model(const std::string& name_or_path) {
  const auto names = builtin_graph_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_graph(name_or_path);
  }
  return read_model_file(name_or_path);
}

std::string format_node_set(const CausalModel& model, const Intervention& iv) {
  std::string out = "{";
  for (std::size_t i = 0; i < iv.nodes.size(); ++i) {
    if (i) out += ",";
    out += model.node(iv.nodes[i]).name;
    if (!iv.values[i]) out += "=0";
  }
  return out + "}";
}

}  // namespace ccb
