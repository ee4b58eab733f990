#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridalloc/dataset.hpp"
#include "gridalloc/graph.hpp"
#include "gridalloc/predictor.hpp"

namespace gridalloc {

struct LoadCenter {
  GeoPoint centroid;
  std::vector<std::size_t> member_facilities;  // indices into the clustered point set
};

struct AllocationResult {
  std::string method;
  std::vector<double> facility_volume;  // aligned with the facilities list
};

/// Lloyd's algorithm with k-means++ style seeding, run to an assignment
/// fixpoint (at most 100 iterations). Empty clusters are re-seeded to the
/// point farthest from its current center.
std::vector<LoadCenter> kmeans(const std::vector<GeoPoint>& points, std::size_t k,
                               std::uint64_t seed);

/// Per-cell weight vectors, normalized per region. Region index per cell is
/// resolved through region ids.
std::vector<double> uniform_weights(const std::vector<GridCell>& cells,
                                    const std::vector<Region>& regions);
std::vector<double> static_gpm_weights(const std::vector<GridCell>& cells,
                                       const std::vector<Region>& regions,
                                       const std::map<std::string, double>& class_weight_table,
                                       const std::vector<std::string>& class_set);
std::vector<double> to_cell_weights(const EdgeWeightField& field, const HeteroGraph& g,
                                    std::size_t n_cells);

/// Nearest facility within the cell's own region (Euclidean on centroids,
/// ties to the lowest facility index). Returns global facility indices.
std::vector<std::size_t> assign_vd(const std::vector<GridCell>& cells,
                                   const std::vector<Facility>& facilities);

struct CivdAssignment {
  std::vector<std::size_t> cell_cluster;  // global cluster index per cell
  std::vector<LoadCenter> clusters;       // member_facilities hold global facility indices
};

/// Clusters each region's facilities into load centers (k = 0 selects
/// ceil(sqrt(n)) per region), then assigns cells to the nearest center of
/// their region, ties to the lowest cluster index.
CivdAssignment assign_civd(const std::vector<GridCell>& cells,
                           const std::vector<Facility>& facilities, std::size_t k,
                           std::uint64_t seed);

/// VD path: facility volume = region total x sum of its cells' weights.
AllocationResult aggregate_vd(const std::vector<std::size_t>& assignment,
                              const std::vector<double>& cell_weights,
                              const std::vector<GridCell>& cells,
                              const std::vector<Region>& regions,
                              const std::vector<Facility>& facilities, std::string method);

/// CIVD path: each cluster's weight mass is split evenly over its member
/// facilities.
AllocationResult aggregate_civd(const CivdAssignment& assignment,
                                const std::vector<double>& cell_weights,
                                const std::vector<GridCell>& cells,
                                const std::vector<Region>& regions,
                                const std::vector<Facility>& facilities, std::string method);

void save_allocations_csv(const std::filesystem::path& path,
                          const std::vector<AllocationResult>& results,
                          const std::vector<Facility>& facilities);

}  // namespace gridalloc
