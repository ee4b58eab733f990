#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gridalloc/dataset.hpp"
#include "gridalloc/tensor.hpp"

namespace gridalloc {

/// Typed bipartite graph: one feature matrix per node type, plus the two
/// directed containment relations. edges_as is always the exact reversal
/// of edges_sa.
struct HeteroGraph {
  Tensor source_features;  // [n_s x d_s]
  Tensor agent_features;   // [n_a x d_a]
  std::vector<std::pair<std::size_t, std::size_t>> edges_sa;  // (source, agent)
  std::vector<std::pair<std::size_t, std::size_t>> edges_as;  // (agent, source)
  std::vector<std::string> source_ids;
  std::vector<std::string> agent_ids;

  std::size_t n_sources() const { return source_features.n_rows; }
  std::size_t n_agents() const { return agent_features.n_rows; }
};

struct FeatureSpec {
  std::vector<std::string> source_layout;
  std::vector<std::string> agent_layout;
  // per-source indicator total used to normalize population/GVA into shares
  std::vector<double> source_normalizers;
};

struct BuildGraphResult {
  HeteroGraph graph;
  FeatureSpec spec;
  std::vector<std::string> warnings;  // e.g. sources with empty neighborhoods
};

/// Source features are indicator shares [pop/T, gva_k/T] with T the
/// region's total over all indicator components (zero totals map to zero
/// features). Agent features are [fractions || dominant one-hot].
BuildGraphResult build_graph(const std::vector<Region>& regions,
                             const std::vector<GridCell>& cells,
                             const std::vector<std::string>& class_set);

/// Agent indices connected to a source, ascending.
std::vector<std::size_t> neighborhood(const HeteroGraph& g, std::size_t source_index);

void save_graph_json(const std::filesystem::path& path, const HeteroGraph& g,
                     const FeatureSpec& spec);
std::pair<HeteroGraph, FeatureSpec> load_graph_json(const std::filesystem::path& path);

}  // namespace gridalloc
