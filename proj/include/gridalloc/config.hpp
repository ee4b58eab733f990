#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridalloc/trainer.hpp"

namespace gridalloc {

/// Merged run settings: plain key=value config file, flag overrides on top.
/// Unknown keys are rejected.
struct RunConfig {
  // inputs
  std::filesystem::path region_file, landuse_file, indicators_file, facilities_file;
  std::filesystem::path out_dir{"out"};

  // grid
  std::size_t grid_target{400};
  double grid_quantum{1.0};

  // training
  TrainConfig train;
  std::vector<std::string> train_region_ids;  // empty = all regions
  std::vector<std::string> test_region_ids;

  // allocation
  std::size_t civd_k{0};  // 0 = ceil(sqrt(n_facilities)) per region

  // static GPM baseline: class -> weight; classes not listed default to 1
  std::map<std::string, double> gpm_weights;

  // synthetic generation (full-run only)
  bool synth{false};
  std::size_t synth_train_regions{4};
  std::size_t synth_test_regions{2};
  std::size_t synth_cells{400};
  std::size_t synth_facilities{6};

  std::map<std::string, std::string> snapshot() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace gridalloc
