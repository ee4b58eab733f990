#pragma once

#include <filesystem>
#include <string>

#include "gridalloc/config.hpp"

namespace gridalloc {

/// File layout of the intermediates inside out_dir; every stage reads its
/// predecessors' artifacts from here.
struct StagePaths {
  std::filesystem::path cells, graph, encoder, predictor, loss_trace, weights, heatmap,
      allocations, comparison_csv, comparison_txt, weight_quality, manifest;
  explicit StagePaths(const std::filesystem::path& out_dir);
};

/// Stage entry points. Each stage loads what it needs from the config's
/// input files plus the serialized intermediates of earlier stages.
void stage_synth(RunConfig& config);  // rewrites the config's input paths
void stage_ingest(const RunConfig& config);
void stage_build_graph(const RunConfig& config);
void stage_train(const RunConfig& config);
void stage_allocate(const RunConfig& config);
void stage_evaluate(const RunConfig& config);

/// synth (optional) -> ingest -> build-graph -> train -> allocate ->
/// evaluate, then writes the run manifest. Throws on the first failing
/// stage with the stage name in the message.
void full_run(RunConfig config);

}  // namespace gridalloc
