#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gridalloc/encoder.hpp"
#include "gridalloc/graph.hpp"
#include "gridalloc/tape.hpp"

namespace gridalloc {

/// Per-edge allocation weights, aligned with HeteroGraph::edges_sa.
/// Weights of edges sharing a source sum to 1.
struct EdgeWeightField {
  std::vector<double> weights;
  double tau{0};
  std::vector<std::size_t> groups;  // per-edge source index
};

/// Gate MLP: two affine layers [2d -> d -> 1], ReLU between, sigmoid last.
struct PredictorParams {
  Tensor w1, b1;  // [2d x d], [1 x d]
  Tensor w2, b2;  // [d x 1], [1 x 1]
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

PredictorParams init_predictor_params(std::size_t d, std::uint64_t seed);

struct TapePredictorParams {
  Tape::NodeId w1{}, b1{}, w2{}, b2{};
  std::vector<Tape::NodeId> all;
};

TapePredictorParams put_predictor_on_tape(Tape& tape, const PredictorParams& params);

/// c(s,a) = sigmoid(MLP([h_s || h_a])) * ||h_s - h_a||_2, one row per edge.
Tape::NodeId relation_cost_on_tape(Tape& tape, Tape::NodeId h_source, Tape::NodeId h_agent,
                                   const std::vector<std::size_t>& edge_src,
                                   const std::vector<std::size_t>& edge_agent,
                                   const TapePredictorParams& p);

std::vector<double> relation_cost(const Tensor& h_source, const Tensor& h_agent,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                  const PredictorParams& params);

/// Value-level grouped softmax of -costs/tau per source group.
EdgeWeightField grouped_softmax(const std::vector<double>& costs,
                                const std::vector<std::size_t>& groups, double tau);

struct PredictNodes {
  Tape::NodeId weights{};  // [n_edges x 1]
  EncodeNodes encode;
};

PredictNodes predict_weights_on_tape(Tape& tape, const HeteroGraph& g,
                                     const TapeEncoderParams& enc,
                                     const TapePredictorParams& pred, double tau);

/// encode -> relation cost -> grouped softmax, evaluated to values.
EdgeWeightField predict_weights(const HeteroGraph& g, const EncoderParams& encoder,
                                const PredictorParams& predictor, double tau);

void save_predictor_checkpoint(const std::filesystem::path& path, const PredictorParams& params);
PredictorParams load_predictor_checkpoint(const std::filesystem::path& path);

/// weights CSV: source_id,agent_id,weight
void save_weights_csv(const std::filesystem::path& path, const HeteroGraph& g,
                      const EdgeWeightField& field);
EdgeWeightField load_weights_csv(const std::filesystem::path& path, const HeteroGraph& g);

/// Grayscale PGM heatmap of per-cell weights on the cell grid (one pixel
/// per cell, white = region max).
void save_weight_heatmap_pgm(const std::filesystem::path& path,
                             const std::vector<GridCell>& cells,
                             const std::vector<double>& cell_weights);

}  // namespace gridalloc
