#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gridalloc/graph.hpp"
#include "gridalloc/tape.hpp"
#include "gridalloc/tensor.hpp"

namespace gridalloc {

/// Relation-specific attention weights. Queries come from the target type,
/// keys and values from the neighbor type.
struct RelationAttnParams {
  Tensor wq, wk, wv, wo;  // each [d x d]
};

struct EncoderLayerParams {
  RelationAttnParams sa;  // source -> agent (agents attend over sources)
  RelationAttnParams as;  // agent -> source (sources attend over agents)
  Tensor ff_source, ff_agent;            // per-type feed-forward, [d x d]
  Tensor res_scale_source, res_scale_agent;  // [1 x 1], init 1
};

struct EncoderParams {
  std::size_t dim{0};
  std::size_t heads{0};
  Tensor proj_source;  // [d_s x d]
  Tensor proj_agent;   // [d_a x d]
  std::vector<EncoderLayerParams> layer_params;

  std::size_t layers() const { return layer_params.size(); }
  /// Stable (name, tensor) enumeration used by the optimizer and checkpoints.
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

EncoderParams init_encoder_params(std::size_t d_source, std::size_t d_agent, std::size_t d,
                                  std::size_t heads, std::size_t layers, std::uint64_t seed);

/// Node ids of the encoder parameters registered on a tape, mirroring
/// EncoderParams. Build with put_encoder_on_tape.
struct TapeEncoderParams {
  std::size_t heads{0};
  Tape::NodeId proj_source{}, proj_agent{};
  struct Rel {
    Tape::NodeId wq{}, wk{}, wv{}, wo{};
  };
  struct Layer {
    Rel sa, as;
    Tape::NodeId ff_source{}, ff_agent{}, rs_source{}, rs_agent{};
  };
  std::vector<Layer> layers;
  std::vector<Tape::NodeId> all;  // same order as EncoderParams::named_tensors
};

TapeEncoderParams put_encoder_on_tape(Tape& tape, const EncoderParams& params);

struct EncodeNodes {
  Tape::NodeId h_source{};  // [n_s x d]
  Tape::NodeId h_agent{};   // [n_a x d]
  // attention weight nodes ([n_edges x heads], one per layer per relation),
  // kept for inspection; rows sum to 1 per target per head
  std::vector<Tape::NodeId> attention;
};

/// Per-type projection followed by the heterogeneous attention layers.
/// Both relations of a layer read the previous layer's activations.
EncodeNodes encode_on_tape(Tape& tape, const HeteroGraph& g, const TapeEncoderParams& p);

/// Convenience wrapper: runs encode on a throwaway tape, returns values.
std::pair<Tensor, Tensor> encode(const HeteroGraph& g, const EncoderParams& params);

void save_encoder_checkpoint(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_encoder_checkpoint(const std::filesystem::path& path);

}  // namespace gridalloc
