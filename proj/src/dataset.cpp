#include "gridalloc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gridalloc {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path.string() + " at byte " +
                             std::to_string(e.byte) + ": " + e.what());
  }
}

Ring parse_ring(const json& coords, const std::filesystem::path& path) {
  Ring ring;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2)
      throw std::runtime_error("malformed coordinate in " + path.string());
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  // GeoJSON rings repeat the first vertex; drop it
  if (ring.size() >= 2 && ring.front().x == ring.back().x && ring.front().y == ring.back().y)
    ring.pop_back();
  if (ring.size() < 3) throw std::runtime_error("degenerate ring in " + path.string());
  return ring;
}

Polygon parse_polygon_rings(const json& rings, const std::filesystem::path& path) {
  Polygon poly;
  poly.outer = parse_ring(rings.at(0), path);
  for (std::size_t i = 1; i < rings.size(); ++i)
    poly.holes.push_back(parse_ring(rings.at(i), path));
  return poly;
}

MultiPolygon parse_geometry(const json& geom, const std::filesystem::path& path) {
  const std::string type = geom.at("type").get<std::string>();
  MultiPolygon mp;
  if (type == "Polygon") {
    mp.push_back(parse_polygon_rings(geom.at("coordinates"), path));
  } else if (type == "MultiPolygon") {
    for (const auto& rings : geom.at("coordinates"))
      mp.push_back(parse_polygon_rings(rings, path));
  } else {
    throw std::runtime_error("unsupported geometry type '" + type + "' in " + path.string());
  }
  return mp;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("invalid number '" + s + "' in " + context);
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& region_file,
                     const std::filesystem::path& landuse_file,
                     const std::filesystem::path& indicators_file,
                     const std::filesystem::path& facilities_file) {
  Dataset ds;

  // Regions
  json regions_json = parse_json(region_file);
  for (const auto& feature : regions_json.at("features")) {
    Region r;
    r.id = feature.at("properties").at("id").get<std::string>();
    r.boundary = parse_geometry(feature.at("geometry"), region_file);
    ds.regions.push_back(std::move(r));
  }

  // Land use
  json landuse_json = parse_json(landuse_file);
  for (const auto& feature : landuse_json.at("features")) {
    std::string cls = feature.at("properties").at("class").get<std::string>();
    auto it = std::find(ds.landuse.class_set.begin(), ds.landuse.class_set.end(), cls);
    std::size_t idx;
    if (it == ds.landuse.class_set.end()) {
      idx = ds.landuse.class_set.size();
      ds.landuse.class_set.push_back(cls);
    } else {
      idx = static_cast<std::size_t>(it - ds.landuse.class_set.begin());
    }
    ds.landuse.patches.push_back({parse_geometry(feature.at("geometry"), landuse_file), idx});
  }

  // Indicators
  auto ind_rows = read_csv(indicators_file);
  if (ind_rows.empty()) throw std::runtime_error("empty indicators file: " + indicators_file.string());
  const auto& header = ind_rows[0];
  if (header.size() < 3 || header[0] != "region_id" || header[1] != "population" ||
      header[2] != "total_volume")
    throw std::runtime_error("indicators header must start with region_id,population,total_volume");
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c].rfind("gva_", 0) != 0)
      throw std::runtime_error("indicator column '" + header[c] + "' must be named gva_<category>");
    ds.gva_categories.push_back(header[c].substr(4));
  }
  std::map<std::string, std::size_t> region_index;
  for (std::size_t i = 0; i < ds.regions.size(); ++i) region_index[ds.regions[i].id] = i;
  std::vector<bool> seen(ds.regions.size(), false);
  for (std::size_t i = 1; i < ind_rows.size(); ++i) {
    const auto& row = ind_rows[i];
    if (row.size() != header.size())
      throw std::runtime_error("indicators row " + std::to_string(i) + " has wrong column count");
    auto it = region_index.find(row[0]);
    if (it == region_index.end())
      throw std::runtime_error("indicator row for unknown region id '" + row[0] + "'");
    Region& r = ds.regions[it->second];
    r.population = parse_double(row[1], "indicators population");
    r.total_volume = parse_double(row[2], "indicators total_volume");
    r.gva.clear();
    for (std::size_t c = 3; c < row.size(); ++c)
      r.gva.push_back(parse_double(row[c], "indicators gva"));
    if (r.population < 0 || r.total_volume < 0 ||
        std::any_of(r.gva.begin(), r.gva.end(), [](double v) { return v < 0; }))
      throw std::runtime_error("negative indicator value for region '" + r.id + "'");
    seen[it->second] = true;
  }
  for (std::size_t i = 0; i < ds.regions.size(); ++i)
    if (!seen[i])
      throw std::runtime_error("missing indicator row for region '" + ds.regions[i].id + "'");

  // Facilities
  auto fac_rows = read_csv(facilities_file);
  if (!fac_rows.empty()) {
    const auto& fh = fac_rows[0];
    if (fh.size() < 4 || fh[0] != "id" || fh[1] != "region_id" || fh[2] != "x" || fh[3] != "y")
      throw std::runtime_error("facilities header must be id,region_id,x,y[,ground_truth_demand]");
    bool has_truth = fh.size() >= 5 && fh[4] == "ground_truth_demand";
    for (std::size_t i = 1; i < fac_rows.size(); ++i) {
      const auto& row = fac_rows[i];
      Facility f;
      f.id = row[0];
      f.region_id = row[1];
      f.location = {parse_double(row[2], "facilities x"), parse_double(row[3], "facilities y")};
      if (has_truth && row.size() >= 5 && !row[4].empty()) {
        double v = parse_double(row[4], "facilities ground_truth_demand");
        if (v < 0) throw std::runtime_error("negative ground truth for facility '" + f.id + "'");
        f.ground_truth_demand = v;
      }
      auto it = region_index.find(f.region_id);
      if (it == region_index.end())
        throw std::runtime_error("facility '" + f.id + "' references unknown region '" +
                                 f.region_id + "'");
      if (!point_in_polygon(f.location, ds.regions[it->second].boundary))
        throw std::runtime_error("facility '" + f.id + "' lies outside region '" + f.region_id +
                                 "'");
      ds.facilities.push_back(std::move(f));
    }
  }

  return ds;
}

std::vector<GridCell> generate_grid(const Region& region, const LandUseMap& landuse,
                                    std::size_t target_cell_count, double quantum) {
  if (target_cell_count < 1) throw std::invalid_argument("target_cell_count must be >= 1");
  if (quantum <= 0) throw std::invalid_argument("quantum must be positive");
  BBox bbox = bounding_box(region.boundary);
  if (polygon_area(region.boundary) <= 0 || bbox.area() <= 0)
    throw std::runtime_error("degenerate (zero-area) region '" + region.id + "'");

  double side = std::sqrt(bbox.area() / static_cast<double>(target_cell_count));
  side = std::max(std::round(side / quantum), 1.0) * quantum;

  auto n_along = [&](double extent) {
    return static_cast<std::size_t>(std::ceil(extent / side - 1e-9));
  };
  std::size_t nx = std::max<std::size_t>(1, n_along(bbox.width()));
  std::size_t ny = std::max<std::size_t>(1, n_along(bbox.height()));

  // patch bboxes, to skip clipping far-away patches
  std::vector<BBox> patch_boxes;
  patch_boxes.reserve(landuse.patches.size());
  for (const auto& patch : landuse.patches) patch_boxes.push_back(bounding_box(patch.shape));

  std::vector<GridCell> cells;
  double cell_area = side * side;
  for (std::size_t row = 0; row < ny; ++row) {
    for (std::size_t col = 0; col < nx; ++col) {
      BBox rect{bbox.min_x + col * side, bbox.min_y + row * side,
                bbox.min_x + (col + 1) * side, bbox.min_y + (row + 1) * side};
      GeoPoint centroid{0.5 * (rect.min_x + rect.max_x), 0.5 * (rect.min_y + rect.max_y)};
      if (!point_in_polygon(centroid, region.boundary)) continue;

      GridCell cell;
      cell.id = region.id + ":r" + std::to_string(row) + "c" + std::to_string(col);
      cell.region_id = region.id;
      cell.centroid = centroid;
      cell.side = side;
      cell.fractions.assign(landuse.class_set.size(), 0.0);
      for (std::size_t p = 0; p < landuse.patches.size(); ++p) {
        const BBox& pb = patch_boxes[p];
        if (pb.max_x <= rect.min_x || pb.min_x >= rect.max_x || pb.max_y <= rect.min_y ||
            pb.min_y >= rect.max_y)
          continue;
        cell.fractions[landuse.patches[p].class_index] +=
            intersection_area_with_rect(landuse.patches[p].shape, rect) / cell_area;
      }
      for (double& f : cell.fractions) f = std::clamp(f, 0.0, 1.0);
      cell.dominant_class = static_cast<std::size_t>(
          std::max_element(cell.fractions.begin(), cell.fractions.end()) -
          cell.fractions.begin());
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void save_cells_csv(const std::filesystem::path& path, const std::vector<GridCell>& cells,
                    const std::vector<std::string>& class_set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "cell_id,region_id,x,y,side,dominant";
  for (const auto& cls : class_set) out << ",frac_" << cls;
  out << "\n";
  out.precision(17);
  for (const auto& c : cells) {
    out << c.id << "," << c.region_id << "," << c.centroid.x << "," << c.centroid.y << ","
        << c.side << "," << c.dominant_class;
    for (double f : c.fractions) out << "," << f;
    out << "\n";
  }
}

std::vector<GridCell> load_cells_csv(const std::filesystem::path& path,
                                     std::vector<std::string>& class_set_out) {
  auto rows = read_csv(path);
  if (rows.empty()) throw std::runtime_error("empty cells file: " + path.string());
  const auto& header = rows[0];
  if (header.size() < 6 || header[0] != "cell_id")
    throw std::runtime_error("unrecognized cells file header in " + path.string());
  class_set_out.clear();
  for (std::size_t c = 6; c < header.size(); ++c) {
    if (header[c].rfind("frac_", 0) != 0)
      throw std::runtime_error("unexpected cells column '" + header[c] + "'");
    class_set_out.push_back(header[c].substr(5));
  }
  std::vector<GridCell> cells;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != header.size())
      throw std::runtime_error("cells row " + std::to_string(i) + " has wrong column count");
    GridCell cell;
    cell.id = row[0];
    cell.region_id = row[1];
    cell.centroid = {parse_double(row[2], "cells x"), parse_double(row[3], "cells y")};
    cell.side = parse_double(row[4], "cells side");
    cell.dominant_class = static_cast<std::size_t>(parse_double(row[5], "cells dominant"));
    for (std::size_t c = 6; c < row.size(); ++c)
      cell.fractions.push_back(parse_double(row[c], "cells fraction"));
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace gridalloc
