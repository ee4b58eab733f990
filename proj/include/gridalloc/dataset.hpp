#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridalloc/geometry.hpp"

namespace gridalloc {

/// Macro source entity: the unit whose demand total gets allocated.
struct Region {
  std::string id;
  MultiPolygon boundary;
  double population{0};
  std::vector<double> gva;  // aligned with Dataset::gva_categories
  double total_volume{0};
};

struct LandUsePatch {
  MultiPolygon shape;
  std::size_t class_index;
};

struct LandUseMap {
  std::vector<LandUsePatch> patches;
  std::vector<std::string> class_set;  // file order
};

/// Micro agent entity: one uniform grid cell.
struct GridCell {
  std::string id;
  std::string region_id;
  GeoPoint centroid;
  double side{0};
  std::vector<double> fractions;  // over class_set, remainder is implicit "other"
  std::size_t dominant_class{0};  // argmax of fractions, first index on ties
};

struct Facility {
  std::string id;
  GeoPoint location;
  std::string region_id;
  std::optional<double> ground_truth_demand;
};

struct Dataset {
  std::vector<Region> regions;
  LandUseMap landuse;
  std::vector<Facility> facilities;
  std::vector<std::string> gva_categories;  // from the indicators header
};

/// Loads the four input files. region_file and landuse_file are GeoJSON
/// FeatureCollections in a planar CRS; indicators_file and facilities_file
/// are CSV (see the README for the column contracts).
Dataset load_dataset(const std::filesystem::path& region_file,
                     const std::filesystem::path& landuse_file,
                     const std::filesystem::path& indicators_file,
                     const std::filesystem::path& facilities_file);

/// Tiles the region's bounding box with square cells of side
/// sqrt(bbox_area / target_cell_count), rounded to `quantum`, keeping only
/// cells whose centroid lies inside the boundary. Land-use fractions come
/// from exact polygon clipping against each cell.
std::vector<GridCell> generate_grid(const Region& region, const LandUseMap& landuse,
                                    std::size_t target_cell_count, double quantum = 1.0);

void save_cells_csv(const std::filesystem::path& path, const std::vector<GridCell>& cells,
                    const std::vector<std::string>& class_set);
std::vector<GridCell> load_cells_csv(const std::filesystem::path& path,
                                     std::vector<std::string>& class_set_out);

}  // namespace gridalloc
