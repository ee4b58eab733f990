#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gridalloc/config.hpp"
#include "gridalloc/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_file;
  std::vector<std::string> sets;  // extra key=value overrides
  std::string out_dir;
  long long seed{-1};
  bool verbose{false};
};

void add_common(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("-c,--config", opts.config_file, "key=value config file");
  cmd->add_option("-s,--set", opts.sets, "override a config key (key=value, repeatable)");
  cmd->add_option("-o,--out", opts.out_dir, "output directory for intermediates and results");
  cmd->add_option("--seed", opts.seed, "root random seed");
  cmd->add_flag("-v,--verbose", opts.verbose, "print progress to stderr");
}

gridalloc::RunConfig resolve_config(const CliOptions& opts) {
  gridalloc::RunConfig config;
  if (!opts.config_file.empty()) {
    if (!std::filesystem::exists(opts.config_file))
      throw std::runtime_error("missing input file: " + opts.config_file);
    config = gridalloc::load_run_config(opts.config_file);
  }
  for (const std::string& kv : opts.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    gridalloc::apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (opts.seed >= 0) config.train.seed = static_cast<std::uint64_t>(opts.seed);
  return config;
}

void check_inputs(const gridalloc::RunConfig& config) {
  for (const auto& path : {config.region_file, config.landuse_file, config.indicators_file,
                           config.facilities_file}) {
    if (path.empty()) throw std::runtime_error("missing input file: input path not configured");
    if (!std::filesystem::exists(path))
      throw std::runtime_error("missing input file: " + path.string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage regional demand allocation: learned grid-cell weights plus "
               "Voronoi / cluster-induced Voronoi partitioning"};
  app.require_subcommand(1);
  CliOptions opts;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  CLI::App* ingest = app.add_subcommand("ingest", "load inputs and rasterize the cell grid");
  CLI::App* build = app.add_subcommand("build-graph", "assemble the bipartite graph");
  CLI::App* train = app.add_subcommand("train", "fit the weight model on the training split");
  CLI::App* alloc = app.add_subcommand("allocate", "predict weights and run all six methods");
  CLI::App* eval = app.add_subcommand("evaluate", "compare methods against ground truth");
  CLI::App* full = app.add_subcommand("full-run", "run every stage and write a manifest");
  for (CLI::App* cmd : {synth, ingest, build, train, alloc, eval, full}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    gridalloc::RunConfig config = resolve_config(opts);
    auto note = [&](const char* what) {
      if (opts.verbose) std::cerr << "[gridalloc] " << what << "\n";
    };
    if (synth->parsed()) {
      note("generating synthetic dataset");
      gridalloc::stage_synth(config);
      std::cout << "synthetic inputs written under "
                << (config.out_dir / "synth").string() << "\n";
    } else if (ingest->parsed()) {
      check_inputs(config);
      note("rasterizing regions");
      gridalloc::stage_ingest(config);
    } else if (build->parsed()) {
      check_inputs(config);
      note("building graph");
      gridalloc::stage_build_graph(config);
    } else if (train->parsed()) {
      check_inputs(config);
      note("training");
      gridalloc::stage_train(config);
    } else if (alloc->parsed()) {
      check_inputs(config);
      note("allocating");
      gridalloc::stage_allocate(config);
    } else if (eval->parsed()) {
      check_inputs(config);
      note("evaluating");
      gridalloc::stage_evaluate(config);
    } else if (full->parsed()) {
      if (!config.synth) check_inputs(config);
      note("full run");
      gridalloc::full_run(config);
      std::cout << "results written under " << config.out_dir.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::string(e.what()).rfind("missing input file", 0) == 0 ? 2 : 1;
  }
  return 0;
}
