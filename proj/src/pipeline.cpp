#include "gridalloc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "gridalloc/allocator.hpp"
#include "gridalloc/eval.hpp"
#include "gridalloc/graph.hpp"
#include "gridalloc/trainer.hpp"

namespace gridalloc {

StagePaths::StagePaths(const std::filesystem::path& out_dir)
    : cells(out_dir / "cells.csv"),
      graph(out_dir / "graph.json"),
      encoder(out_dir / "encoder.json"),
      predictor(out_dir / "predictor.json"),
      loss_trace(out_dir / "loss_trace.csv"),
      weights(out_dir / "weights.csv"),
      heatmap(out_dir / "weights.pgm"),
      allocations(out_dir / "allocations.csv"),
      comparison_csv(out_dir / "comparison.csv"),
      comparison_txt(out_dir / "comparison.txt"),
      weight_quality(out_dir / "weight_quality.csv"),
      manifest(out_dir / "manifest.json") {}

namespace {

Dataset load_inputs(const RunConfig& c) {
  return load_dataset(c.region_file, c.landuse_file, c.indicators_file, c.facilities_file);
}

std::map<std::string, double> gpm_table(const RunConfig& c,
                                        const std::vector<std::string>& class_set) {
  std::map<std::string, double> table;
  for (const std::string& cls : class_set) {
    auto it = c.gpm_weights.find(cls);
    table[cls] = it != c.gpm_weights.end() ? it->second : 1.0;
  }
  return table;
}

struct LoadedCheckpoints {
  EncoderParams encoder;
  PredictorParams predictor;
};

LoadedCheckpoints load_checkpoints(const RunConfig& c, const StagePaths& paths) {
  LoadedCheckpoints out{load_encoder_checkpoint(paths.encoder),
                        load_predictor_checkpoint(paths.predictor)};
  if (out.encoder.dim != c.train.dim || out.encoder.heads != c.train.heads ||
      out.encoder.layers() != c.train.layers)
    throw std::runtime_error(
        "checkpoint " + paths.encoder.string() + " was trained with dim=" +
        std::to_string(out.encoder.dim) + " heads=" + std::to_string(out.encoder.heads) +
        " layers=" + std::to_string(out.encoder.layers()) +
        ", which does not match the configured dim=" + std::to_string(c.train.dim) +
        " heads=" + std::to_string(c.train.heads) +
        " layers=" + std::to_string(c.train.layers) + "; refusing to continue");
  if (out.predictor.w1.n_rows != 2 * c.train.dim)
    throw std::runtime_error("predictor checkpoint gate width does not match dim=" +
                             std::to_string(c.train.dim) + "; refusing to continue");
  return out;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<std::uint8_t>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace

void stage_synth(RunConfig& config) {
  SyntheticSpec spec;
  spec.n_train = config.synth_train_regions;
  spec.n_test = config.synth_test_regions;
  spec.cells_per_region = config.synth_cells;
  spec.facilities_per_region = config.synth_facilities;
  std::filesystem::create_directories(config.out_dir);
  SyntheticOutput out = generate_synthetic(spec, config.train.seed, config.out_dir / "synth");
  // pin the grid so ingest reproduces the generator's cells exactly
  config.grid_target = spec.cells_per_region;
  config.grid_quantum = 1.0;
  config.region_file = out.region_file;
  config.landuse_file = out.landuse_file;
  config.indicators_file = out.indicators_file;
  config.facilities_file = out.facilities_file;
  if (config.train_region_ids.empty()) config.train_region_ids = out.train_region_ids;
  if (config.test_region_ids.empty()) config.test_region_ids = out.test_region_ids;
}

void stage_ingest(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  StagePaths paths(config.out_dir);
  Dataset ds = load_inputs(config);
  std::vector<GridCell> cells;
  for (const Region& region : ds.regions) {
    std::vector<GridCell> region_cells =
        generate_grid(region, ds.landuse, config.grid_target, config.grid_quantum);
    cells.insert(cells.end(), region_cells.begin(), region_cells.end());
  }
  save_cells_csv(paths.cells, cells, ds.landuse.class_set);
}

void stage_build_graph(const RunConfig& config) {
  StagePaths paths(config.out_dir);
  Dataset ds = load_inputs(config);
  std::vector<std::string> class_set;
  std::vector<GridCell> cells = load_cells_csv(paths.cells, class_set);
  BuildGraphResult built = build_graph(ds.regions, cells, class_set);
  for (const std::string& w : built.warnings) std::cerr << "warning: " << w << "\n";
  save_graph_json(paths.graph, built.graph, built.spec);
}

void stage_train(const RunConfig& config) {
  StagePaths paths(config.out_dir);
  Dataset ds = load_inputs(config);
  std::vector<std::string> class_set;
  std::vector<GridCell> cells = load_cells_csv(paths.cells, class_set);

  // restrict to the training split
  std::vector<Region> regions = ds.regions;
  std::vector<GridCell> train_cells = cells;
  if (!config.train_region_ids.empty()) {
    auto in_split = [&](const std::string& id) {
      return std::find(config.train_region_ids.begin(), config.train_region_ids.end(), id) !=
             config.train_region_ids.end();
    };
    regions.clear();
    for (const Region& r : ds.regions)
      if (in_split(r.id)) regions.push_back(r);
    if (regions.empty()) throw std::runtime_error("train_regions matches no region");
    train_cells.clear();
    for (const GridCell& c : cells)
      if (in_split(c.region_id)) train_cells.push_back(c);
  }

  BuildGraphResult built = build_graph(regions, train_cells, class_set);
  for (const std::string& w : built.warnings) std::cerr << "warning: " << w << "\n";
  CategoryMapping mapping = default_mapping(ds.gva_categories, class_set);
  TrainResult result = train(built.graph, train_cells, regions, class_set, ds.gva_categories,
                             mapping, config.train);
  save_encoder_checkpoint(paths.encoder, result.encoder);
  save_predictor_checkpoint(paths.predictor, result.predictor);
  save_loss_trace_csv(paths.loss_trace, result.loss_trace);
}

void stage_allocate(const RunConfig& config) {
  StagePaths paths(config.out_dir);
  Dataset ds = load_inputs(config);
  std::vector<std::string> class_set;
  std::vector<GridCell> cells = load_cells_csv(paths.cells, class_set);
  auto [graph, spec] = load_graph_json(paths.graph);
  LoadedCheckpoints params = load_checkpoints(config, paths);

  EdgeWeightField learned = predict_weights(graph, params.encoder, params.predictor,
                                            config.train.tau);
  save_weights_csv(paths.weights, graph, learned);
  std::vector<double> w_gnn = to_cell_weights(learned, graph, cells.size());
  save_weight_heatmap_pgm(paths.heatmap, cells, w_gnn);

  std::vector<double> w_uniform = uniform_weights(cells, ds.regions);
  std::vector<double> w_gpm =
      static_gpm_weights(cells, ds.regions, gpm_table(config, class_set), class_set);
  std::vector<std::size_t> vd = assign_vd(cells, ds.facilities);
  CivdAssignment civd = assign_civd(cells, ds.facilities, config.civd_k, config.train.seed);

  std::vector<AllocationResult> results;
  results.push_back(aggregate_vd(vd, w_uniform, cells, ds.regions, ds.facilities, "VD"));
  results.push_back(aggregate_vd(vd, w_gpm, cells, ds.regions, ds.facilities, "VD-GPM"));
  results.push_back(aggregate_vd(vd, w_gnn, cells, ds.regions, ds.facilities, "VD-GNN-GPM"));
  results.push_back(aggregate_civd(civd, w_uniform, cells, ds.regions, ds.facilities, "CIVD"));
  results.push_back(aggregate_civd(civd, w_gpm, cells, ds.regions, ds.facilities, "CIVD-GPM"));
  results.push_back(
      aggregate_civd(civd, w_gnn, cells, ds.regions, ds.facilities, "CIVD-GNN-GPM"));
  save_allocations_csv(paths.allocations, results, ds.facilities);
}

void stage_evaluate(const RunConfig& config) {
  StagePaths paths(config.out_dir);
  Dataset ds = load_inputs(config);
  std::vector<std::string> class_set;
  std::vector<GridCell> cells = load_cells_csv(paths.cells, class_set);
  auto [graph, spec] = load_graph_json(paths.graph);
  LoadedCheckpoints params = load_checkpoints(config, paths);

  MatrixConfig mc;
  mc.civd_k = config.civd_k;
  mc.seed = config.train.seed;
  mc.tau = config.train.tau;
  mc.gpm_table = gpm_table(config, class_set);
  mc.test_region_ids = config.test_region_ids;
  std::vector<ComparisonRow> rows = run_matrix(ds.regions, cells, ds.facilities, graph,
                                               class_set, params.encoder, params.predictor, mc);
  save_comparison_csv(paths.comparison_csv, rows);
  save_comparison_txt(paths.comparison_txt, rows);

  // synthetic runs ship a planted-weight oracle next to the inputs
  std::filesystem::path planted = config.indicators_file.parent_path() / "planted_weights.csv";
  if (std::filesystem::exists(planted)) {
    std::map<std::string, double> oracle = load_planted_weights(planted);
    EdgeWeightField learned =
        predict_weights(graph, params.encoder, params.predictor, config.train.tau);
    std::vector<double> w_gnn = to_cell_weights(learned, graph, cells.size());

    std::ofstream out(paths.weight_quality);
    out << "region_id,spearman,top_decile_overlap\n";
    out.precision(6);
    for (const Region& region : ds.regions) {
      std::vector<double> predicted, planted_w;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].region_id != region.id) continue;
        auto it = oracle.find(cells[i].id);
        if (it == oracle.end()) continue;
        predicted.push_back(w_gnn[i]);
        planted_w.push_back(it->second);
      }
      if (predicted.empty()) continue;
      WeightQuality q = weight_quality(predicted, planted_w);
      out << region.id << ","
          << (q.spearman ? std::to_string(*q.spearman) : std::string("undefined")) << ","
          << q.top_decile_overlap << "\n";
    }
  }
}

void full_run(RunConfig config) {
  using clock = std::chrono::steady_clock;
  nlohmann::json timings = nlohmann::json::object();
  auto run_stage = [&](const char* name, auto&& fn) {
    auto start = clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("stage ") + name + " failed: " + e.what());
    }
    timings[name] =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count();
  };

  std::filesystem::create_directories(config.out_dir);
  if (config.synth) run_stage("synth", [&] { stage_synth(config); });
  run_stage("ingest", [&] { stage_ingest(config); });
  run_stage("build-graph", [&] { stage_build_graph(config); });
  run_stage("train", [&] { stage_train(config); });
  run_stage("allocate", [&] { stage_allocate(config); });
  run_stage("evaluate", [&] { stage_evaluate(config); });

  StagePaths paths(config.out_dir);
  nlohmann::json manifest;
  manifest["seed"] = config.train.seed;
  manifest["config"] = config.snapshot();
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [label, path] :
       {std::pair<std::string, std::filesystem::path>{"region_file", config.region_file},
        {"landuse_file", config.landuse_file},
        {"indicators_file", config.indicators_file},
        {"facilities_file", config.facilities_file}}) {
    std::ostringstream hex;
    hex << std::hex << fnv1a64_file(path);
    hashes[label] = hex.str();
  }
  manifest["input_hashes"] = hashes;
  manifest["stage_ms"] = timings;
  std::ofstream out(paths.manifest);
  if (!out) throw std::runtime_error("cannot write manifest: " + paths.manifest.string());
  out << manifest.dump(2);
}

}  // namespace gridalloc
