#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridalloc/allocator.hpp"
#include "gridalloc/dataset.hpp"
#include "gridalloc/encoder.hpp"
#include "gridalloc/predictor.hpp"

namespace gridalloc {

double rmse(const AllocationResult& result, const std::vector<Facility>& facilities);

struct ComparisonRow {
  std::string region_id;
  bool test_split{false};
  double vd{0}, vd_gpm{0}, vd_gnn{0};
  double civd{0}, civd_gpm{0}, civd_gnn{0};
  double vd_pct{0};    // (vd_gpm - vd_gnn) / vd_gpm * 100
  double civd_pct{0};  // (civd_gpm - civd_gnn) / civd_gpm * 100
};

struct MatrixConfig {
  std::size_t civd_k{0};  // 0 = ceil(sqrt(n_facilities)) per region
  std::uint64_t seed{0};
  double tau{0.5};
  std::map<std::string, double> gpm_table;     // static class weights
  std::vector<std::string> test_region_ids;    // marked in the output table
};

/// Runs all six methods per region and collects their RMSE.
std::vector<ComparisonRow> run_matrix(const std::vector<Region>& regions,
                                      const std::vector<GridCell>& cells,
                                      const std::vector<Facility>& facilities,
                                      const HeteroGraph& g,
                                      const std::vector<std::string>& class_set,
                                      const EncoderParams& encoder,
                                      const PredictorParams& predictor,
                                      const MatrixConfig& config);

void save_comparison_csv(const std::filesystem::path& path,
                         const std::vector<ComparisonRow>& rows);
void save_comparison_txt(const std::filesystem::path& path,
                         const std::vector<ComparisonRow>& rows);

/// Synthetic benchmark: rectangular regions partitioned into class blocks,
/// planted per-class intensities, facility demands from exact VD over the
/// planted weights, indicators consistent with the planted class masses.
struct SyntheticSpec {
  std::size_t n_train{4};
  std::size_t n_test{2};
  std::size_t cells_per_region{400};
  std::size_t facilities_per_region{6};
  double region_size{2000};           // meters, square regions
  std::size_t blocks_per_side{4};     // class blocks per region side
  // class name -> planted intensity; classes with zero intensity get zero
  // planted weight (and no mapped indicator)
  std::vector<std::pair<std::string, double>> intensities{
      {"residential", 5.0}, {"industrial", 3.0}, {"commercial", 1.5}, {"other", 0.0}};
  double indicator_scale{1000.0};
  double base_volume{100.0};  // region r gets base_volume * (r + 1)
};

struct SyntheticOutput {
  std::filesystem::path region_file, landuse_file, indicators_file, facilities_file;
  std::filesystem::path planted_weights_file;
  std::vector<std::string> train_region_ids, test_region_ids;
};

SyntheticOutput generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                                   const std::filesystem::path& out_dir);

std::map<std::string, double> load_planted_weights(const std::filesystem::path& path);

struct WeightQuality {
  std::optional<double> spearman;  // unset when either ranking is constant
  double top_decile_overlap{0};
};

/// Spearman rank correlation (tie-aware, average ranks) plus the overlap
/// fraction of the top-10% weighted cells.
WeightQuality weight_quality(const std::vector<double>& predicted,
                             const std::vector<double>& planted);

}  // namespace gridalloc
