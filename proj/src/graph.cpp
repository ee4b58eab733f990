#include "gridalloc/graph.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <stdexcept>

namespace gridalloc {

BuildGraphResult build_graph(const std::vector<Region>& regions,
                             const std::vector<GridCell>& cells,
                             const std::vector<std::string>& class_set) {
  BuildGraphResult out;
  HeteroGraph& g = out.graph;

  std::map<std::string, std::size_t> region_index;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    region_index[regions[i].id] = i;
    g.source_ids.push_back(regions[i].id);
  }

  const std::size_t n_gva = regions.empty() ? 0 : regions.front().gva.size();
  g.source_features = Tensor(regions.size(), 1 + n_gva);
  out.spec.source_layout.push_back("population_share");
  for (std::size_t k = 0; k < n_gva; ++k)
    out.spec.source_layout.push_back("gva_share_" + std::to_string(k));
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    if (r.gva.size() != n_gva)
      throw std::runtime_error("region '" + r.id + "' has inconsistent GVA length");
    double total = r.population;
    for (double v : r.gva) total += v;
    out.spec.source_normalizers.push_back(total);
    if (total > 0) {
      g.source_features.at(i, 0) = r.population / total;
      for (std::size_t k = 0; k < n_gva; ++k) g.source_features.at(i, 1 + k) = r.gva[k] / total;
    }
    // zero-indicator regions keep an all-zero feature row
  }

  const std::size_t n_cls = class_set.size();
  g.agent_features = Tensor(cells.size(), 2 * n_cls);
  for (const auto& cls : class_set) out.spec.agent_layout.push_back("frac_" + cls);
  for (const auto& cls : class_set) out.spec.agent_layout.push_back("onehot_" + cls);
  for (std::size_t a = 0; a < cells.size(); ++a) {
    const GridCell& cell = cells[a];
    if (cell.fractions.size() != n_cls)
      throw std::runtime_error("cell '" + cell.id + "' fraction length != class set size");
    auto it = region_index.find(cell.region_id);
    if (it == region_index.end())
      throw std::runtime_error("cell '" + cell.id + "' references unknown region '" +
                               cell.region_id + "'");
    g.agent_ids.push_back(cell.id);
    for (std::size_t k = 0; k < n_cls; ++k) g.agent_features.at(a, k) = cell.fractions[k];
    g.agent_features.at(a, n_cls + cell.dominant_class) = 1.0;
    g.edges_sa.emplace_back(it->second, a);
    g.edges_as.emplace_back(a, it->second);
  }

  if (!g.source_features.all_finite() || !g.agent_features.all_finite())
    throw std::runtime_error("non-finite feature values after normalization");

  std::vector<std::size_t> degree(regions.size(), 0);
  for (const auto& [s, a] : g.edges_sa) degree[s]++;
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (degree[i] == 0)
      out.warnings.push_back("region '" + regions[i].id +
                             "' has an empty neighborhood; it will be excluded from the loss");
  return out;
}

std::vector<std::size_t> neighborhood(const HeteroGraph& g, std::size_t source_index) {
  if (source_index >= g.n_sources())
    throw std::out_of_range("neighborhood: source index " + std::to_string(source_index) +
                            " out of range");
  std::vector<std::size_t> agents;
  for (const auto& [s, a] : g.edges_sa)
    if (s == source_index) agents.push_back(a);
  std::sort(agents.begin(), agents.end());
  return agents;
}

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.n_rows}, {"cols", t.n_cols}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
  Tensor t(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  t.data = j.at("data").get<std::vector<double>>();
  if (t.data.size() != t.n_rows * t.n_cols)
    throw std::runtime_error("tensor data length does not match its shape");
  return t;
}

}  // namespace

void save_graph_json(const std::filesystem::path& path, const HeteroGraph& g,
                     const FeatureSpec& spec) {
  json j;
  j["version"] = 1;
  j["n_sources"] = g.n_sources();
  j["n_agents"] = g.n_agents();
  j["source_ids"] = g.source_ids;
  j["agent_ids"] = g.agent_ids;
  j["edges_sa"] = g.edges_sa;
  j["source_features"] = tensor_to_json(g.source_features);
  j["agent_features"] = tensor_to_json(g.agent_features);
  j["source_layout"] = spec.source_layout;
  j["agent_layout"] = spec.agent_layout;
  j["source_normalizers"] = spec.source_normalizers;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << j.dump();
}

std::pair<HeteroGraph, FeatureSpec> load_graph_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path.string() + " at byte " +
                             std::to_string(e.byte) + ": " + e.what());
  }
  HeteroGraph g;
  g.source_ids = j.at("source_ids").get<std::vector<std::string>>();
  g.agent_ids = j.at("agent_ids").get<std::vector<std::string>>();
  g.edges_sa = j.at("edges_sa").get<std::vector<std::pair<std::size_t, std::size_t>>>();
  for (const auto& [s, a] : g.edges_sa) g.edges_as.emplace_back(a, s);
  g.source_features = tensor_from_json(j.at("source_features"));
  g.agent_features = tensor_from_json(j.at("agent_features"));
  FeatureSpec spec;
  spec.source_layout = j.at("source_layout").get<std::vector<std::string>>();
  spec.agent_layout = j.at("agent_layout").get<std::vector<std::string>>();
  spec.source_normalizers = j.at("source_normalizers").get<std::vector<double>>();
  return {std::move(g), std::move(spec)};
}

}  // namespace gridalloc
