#include "gridalloc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "gridalloc/rng.hpp"

namespace gridalloc {

namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

std::map<std::string, std::size_t> region_index_map(const std::vector<Region>& regions) {
  std::map<std::string, std::size_t> m;
  for (std::size_t i = 0; i < regions.size(); ++i) m[regions[i].id] = i;
  return m;
}

std::size_t resolve_region(const std::map<std::string, std::size_t>& index,
                           const std::string& id, const std::string& what) {
  auto it = index.find(id);
  if (it == index.end())
    throw std::runtime_error(what + " references unknown region '" + id + "'");
  return it->second;
}

}  // namespace

std::vector<LoadCenter> kmeans(const std::vector<GeoPoint>& points, std::size_t k,
                               std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("kmeans: k must be positive");
  if (k > points.size())
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(points.size()) + " points");
  std::mt19937_64 rng(seed);

  // k-means++ style seeding
  std::vector<GeoPoint> centers;
  std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
  centers.push_back(points[first(rng)]);
  std::vector<double> d2(points.size());
  while (centers.size() < k) {
    double total = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::max();
      for (const GeoPoint& c : centers) best = std::min(best, squared_distance(points[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t chosen = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (acc >= r) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);  // all points coincide with existing centers
    }
    centers.push_back(points[chosen]);
  }

  std::vector<std::size_t> assignment(points.size(), kUnassigned);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(points[i], centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        double d = squared_distance(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<double> sx(k, 0), sy(k, 0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sx[assignment[i]] += points[i].x;
      sy[assignment[i]] += points[i].y;
      count[assignment[i]]++;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        centers[c] = {sx[c] / count[c], sy[c] / count[c]};
      } else {
        // re-seed an empty cluster to the point farthest from its center
        std::size_t far = 0;
        double far_d = -1;
        for (std::size_t i = 0; i < points.size(); ++i) {
          double d = squared_distance(points[i], centers[assignment[i]]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers[c] = points[far];
      }
    }
  }

  std::vector<LoadCenter> out(k);
  for (std::size_t c = 0; c < k; ++c) out[c].centroid = centers[c];
  for (std::size_t i = 0; i < points.size(); ++i)
    out[assignment[i]].member_facilities.push_back(i);
  // drop clusters that stayed empty at the fixpoint
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const LoadCenter& c) { return c.member_facilities.empty(); }),
            out.end());
  return out;
}

std::vector<double> uniform_weights(const std::vector<GridCell>& cells,
                                    const std::vector<Region>& regions) {
  auto index = region_index_map(regions);
  std::vector<std::size_t> count(regions.size(), 0);
  std::vector<std::size_t> cell_region(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cell_region[i] = resolve_region(index, cells[i].region_id, "cell '" + cells[i].id + "'");
    count[cell_region[i]]++;
  }
  std::vector<double> w(cells.size(), 0);
  for (std::size_t i = 0; i < cells.size(); ++i)
    w[i] = 1.0 / static_cast<double>(count[cell_region[i]]);
  return w;
}

std::vector<double> static_gpm_weights(const std::vector<GridCell>& cells,
                                       const std::vector<Region>& regions,
                                       const std::map<std::string, double>& class_weight_table,
                                       const std::vector<std::string>& class_set) {
  for (const std::string& cls : class_set)
    if (!class_weight_table.count(cls))
      throw std::invalid_argument("class weight table is missing class '" + cls + "'");
  auto index = region_index_map(regions);
  std::vector<double> w(cells.size(), 0);
  std::vector<double> region_sum(regions.size(), 0);
  std::vector<std::size_t> region_count(regions.size(), 0);
  std::vector<std::size_t> cell_region(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cell_region[i] = resolve_region(index, cells[i].region_id, "cell '" + cells[i].id + "'");
    double v = class_weight_table.at(class_set[cells[i].dominant_class]);
    if (v < 0) throw std::invalid_argument("class weights must be nonnegative");
    w[i] = v;
    region_sum[cell_region[i]] += v;
    region_count[cell_region[i]]++;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double total = region_sum[cell_region[i]];
    // all-zero region falls back to uniform so the region total is conserved
    w[i] = total > 0 ? w[i] / total : 1.0 / static_cast<double>(region_count[cell_region[i]]);
  }
  return w;
}

std::vector<double> to_cell_weights(const EdgeWeightField& field, const HeteroGraph& g,
                                    std::size_t n_cells) {
  if (field.weights.size() != g.edges_sa.size())
    throw std::invalid_argument("weight field does not align with graph edges");
  std::vector<double> w(n_cells, 0);
  for (std::size_t e = 0; e < g.edges_sa.size(); ++e) {
    if (g.edges_sa[e].second >= n_cells)
      throw std::out_of_range("edge agent index exceeds cell count");
    w[g.edges_sa[e].second] = field.weights[e];
  }
  return w;
}

std::vector<std::size_t> assign_vd(const std::vector<GridCell>& cells,
                                   const std::vector<Facility>& facilities) {
  std::vector<std::size_t> assignment(cells.size(), kUnassigned);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t f = 0; f < facilities.size(); ++f) {
      if (facilities[f].region_id != cells[i].region_id) continue;
      double d = squared_distance(cells[i].centroid, facilities[f].location);
      if (d < best_d) {  // strict: ties keep the lowest index
        best_d = d;
        assignment[i] = f;
      }
    }
  }
  return assignment;
}

CivdAssignment assign_civd(const std::vector<GridCell>& cells,
                           const std::vector<Facility>& facilities, std::size_t k,
                           std::uint64_t seed) {
  CivdAssignment out;

  // cluster per region, in facility file order
  std::vector<std::string> region_order;
  std::map<std::string, std::vector<std::size_t>> facilities_by_region;
  for (std::size_t f = 0; f < facilities.size(); ++f) {
    auto& list = facilities_by_region[facilities[f].region_id];
    if (list.empty()) region_order.push_back(facilities[f].region_id);
    list.push_back(f);
  }

  std::map<std::string, std::pair<std::size_t, std::size_t>> cluster_range;  // region -> [begin,end)
  for (const std::string& rid : region_order) {
    const auto& local = facilities_by_region[rid];
    std::size_t k_r = k == 0 ? static_cast<std::size_t>(
                                   std::ceil(std::sqrt(static_cast<double>(local.size()))))
                             : std::min(k, local.size());
    std::vector<GeoPoint> pts;
    for (std::size_t f : local) pts.push_back(facilities[f].location);
    std::size_t begin = out.clusters.size();
    for (LoadCenter lc : kmeans(pts, k_r, seed_for(seed, rid))) {
      for (std::size_t& m : lc.member_facilities) m = local[m];  // localize -> global
      out.clusters.push_back(std::move(lc));
    }
    cluster_range[rid] = {begin, out.clusters.size()};
  }

  out.cell_cluster.assign(cells.size(), kUnassigned);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto it = cluster_range.find(cells[i].region_id);
    if (it == cluster_range.end()) continue;  // flagged; aggregation errors out
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t c = it->second.first; c < it->second.second; ++c) {
      double d = squared_distance(cells[i].centroid, out.clusters[c].centroid);
      if (d < best_d) {
        best_d = d;
        out.cell_cluster[i] = c;
      }
    }
  }
  return out;
}

AllocationResult aggregate_vd(const std::vector<std::size_t>& assignment,
                              const std::vector<double>& cell_weights,
                              const std::vector<GridCell>& cells,
                              const std::vector<Region>& regions,
                              const std::vector<Facility>& facilities, std::string method) {
  if (assignment.size() != cells.size() || cell_weights.size() != cells.size())
    throw std::invalid_argument("aggregate_vd: inputs do not align with cells");
  auto index = region_index_map(regions);
  AllocationResult result{std::move(method), std::vector<double>(facilities.size(), 0.0)};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (assignment[i] == kUnassigned)
      throw std::runtime_error("cell '" + cells[i].id + "' has no facility in region '" +
                               cells[i].region_id + "'");
    std::size_t r = resolve_region(index, cells[i].region_id, "cell '" + cells[i].id + "'");
    result.facility_volume[assignment[i]] += regions[r].total_volume * cell_weights[i];
  }
  return result;
}

AllocationResult aggregate_civd(const CivdAssignment& assignment,
                                const std::vector<double>& cell_weights,
                                const std::vector<GridCell>& cells,
                                const std::vector<Region>& regions,
                                const std::vector<Facility>& facilities, std::string method) {
  if (assignment.cell_cluster.size() != cells.size() || cell_weights.size() != cells.size())
    throw std::invalid_argument("aggregate_civd: inputs do not align with cells");
  auto index = region_index_map(regions);
  std::vector<double> cluster_mass(assignment.clusters.size(), 0.0);
  std::vector<double> cluster_volume(assignment.clusters.size(), 0.0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::size_t c = assignment.cell_cluster[i];
    if (c == kUnassigned)
      throw std::runtime_error("cell '" + cells[i].id + "' has no load center in region '" +
                               cells[i].region_id + "'");
    std::size_t r = resolve_region(index, cells[i].region_id, "cell '" + cells[i].id + "'");
    cluster_mass[c] += cell_weights[i];
    cluster_volume[c] = regions[r].total_volume;  // clusters never span regions
  }
  AllocationResult result{std::move(method), std::vector<double>(facilities.size(), 0.0)};
  for (std::size_t c = 0; c < assignment.clusters.size(); ++c) {
    const auto& members = assignment.clusters[c].member_facilities;
    if (members.empty()) continue;
    double share = cluster_volume[c] * cluster_mass[c] / static_cast<double>(members.size());
    for (std::size_t f : members) result.facility_volume[f] += share;
  }
  return result;
}

void save_allocations_csv(const std::filesystem::path& path,
                          const std::vector<AllocationResult>& results,
                          const std::vector<Facility>& facilities) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "method,region_id,facility_id,allocated_volume\n";
  out.precision(17);
  for (const AllocationResult& res : results)
    for (std::size_t f = 0; f < facilities.size(); ++f)
      out << res.method << "," << facilities[f].region_id << "," << facilities[f].id << ","
          << res.facility_volume[f] << "\n";
}

}  // namespace gridalloc
