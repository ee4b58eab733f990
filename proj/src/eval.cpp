#include "gridalloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gridalloc/rng.hpp"

namespace gridalloc {

double rmse(const AllocationResult& result, const std::vector<Facility>& facilities) {
  if (result.facility_volume.size() != facilities.size())
    throw std::invalid_argument("rmse: result does not align with facilities");
  std::string missing;
  for (const Facility& f : facilities)
    if (!f.ground_truth_demand) missing += (missing.empty() ? "" : ", ") + f.id;
  if (!missing.empty())
    throw std::runtime_error("rmse: facilities without ground truth: " + missing);
  double acc = 0;
  for (std::size_t i = 0; i < facilities.size(); ++i) {
    double err = result.facility_volume[i] - *facilities[i].ground_truth_demand;
    acc += err * err;
  }
  return std::sqrt(acc / static_cast<double>(facilities.size()));
}

namespace {

double region_rmse(const AllocationResult& result, const std::vector<Facility>& facilities,
                   const std::string& region_id) {
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < facilities.size(); ++i) {
    if (facilities[i].region_id != region_id) continue;
    if (!facilities[i].ground_truth_demand)
      throw std::runtime_error("rmse: facility '" + facilities[i].id + "' has no ground truth");
    double err = result.facility_volume[i] - *facilities[i].ground_truth_demand;
    acc += err * err;
    ++n;
  }
  if (n == 0) return 0.0;
  return std::sqrt(acc / static_cast<double>(n));
}

double pct_reduction(double baseline, double improved) {
  if (baseline == 0) return 0.0;
  return (baseline - improved) / baseline * 100.0;
}

}  // namespace

std::vector<ComparisonRow> run_matrix(const std::vector<Region>& regions,
                                      const std::vector<GridCell>& cells,
                                      const std::vector<Facility>& facilities,
                                      const HeteroGraph& g,
                                      const std::vector<std::string>& class_set,
                                      const EncoderParams& encoder,
                                      const PredictorParams& predictor,
                                      const MatrixConfig& config) {
  std::vector<double> w_uniform = uniform_weights(cells, regions);
  std::vector<double> w_gpm =
      static_gpm_weights(cells, regions, config.gpm_table, class_set);
  EdgeWeightField learned = predict_weights(g, encoder, predictor, config.tau);
  std::vector<double> w_gnn = to_cell_weights(learned, g, cells.size());

  std::vector<std::size_t> vd = assign_vd(cells, facilities);
  CivdAssignment civd = assign_civd(cells, facilities, config.civd_k, config.seed);

  AllocationResult r_vd = aggregate_vd(vd, w_uniform, cells, regions, facilities, "VD");
  AllocationResult r_vd_gpm = aggregate_vd(vd, w_gpm, cells, regions, facilities, "VD-GPM");
  AllocationResult r_vd_gnn =
      aggregate_vd(vd, w_gnn, cells, regions, facilities, "VD-GNN-GPM");
  AllocationResult r_civd =
      aggregate_civd(civd, w_uniform, cells, regions, facilities, "CIVD");
  AllocationResult r_civd_gpm =
      aggregate_civd(civd, w_gpm, cells, regions, facilities, "CIVD-GPM");
  AllocationResult r_civd_gnn =
      aggregate_civd(civd, w_gnn, cells, regions, facilities, "CIVD-GNN-GPM");

  std::vector<ComparisonRow> rows;
  for (const Region& region : regions) {
    ComparisonRow row;
    row.region_id = region.id;
    row.test_split = std::find(config.test_region_ids.begin(), config.test_region_ids.end(),
                               region.id) != config.test_region_ids.end();
    row.vd = region_rmse(r_vd, facilities, region.id);
    row.vd_gpm = region_rmse(r_vd_gpm, facilities, region.id);
    row.vd_gnn = region_rmse(r_vd_gnn, facilities, region.id);
    row.civd = region_rmse(r_civd, facilities, region.id);
    row.civd_gpm = region_rmse(r_civd_gpm, facilities, region.id);
    row.civd_gnn = region_rmse(r_civd_gnn, facilities, region.id);
    row.vd_pct = pct_reduction(row.vd_gpm, row.vd_gnn);
    row.civd_pct = pct_reduction(row.civd_gpm, row.civd_gnn);
    rows.push_back(row);
  }
  return rows;
}

void save_comparison_csv(const std::filesystem::path& path,
                         const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "region_id,split,vd,vd_gpm,vd_gnn_gpm,vd_pct,civd,civd_gpm,civd_gnn_gpm,civd_pct\n";
  out << std::fixed << std::setprecision(6);
  for (const ComparisonRow& r : rows)
    out << r.region_id << "," << (r.test_split ? "test" : "train") << "," << r.vd << ","
        << r.vd_gpm << "," << r.vd_gnn << "," << r.vd_pct << "," << r.civd << "," << r.civd_gpm
        << "," << r.civd_gnn << "," << r.civd_pct << "\n";
}

void save_comparison_txt(const std::filesystem::path& path,
                         const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << std::fixed << std::setprecision(3);
  out << std::left << std::setw(14) << "Region" << std::setw(7) << "Split" << std::right
      << std::setw(10) << "VD" << std::setw(10) << "VD-GPM" << std::setw(12) << "VD-GNN"
      << std::setw(9) << "(%)" << std::setw(10) << "CIVD" << std::setw(11) << "CIVD-GPM"
      << std::setw(12) << "CIVD-GNN" << std::setw(9) << "(%)" << "\n";
  for (const ComparisonRow& r : rows)
    out << std::left << std::setw(14) << r.region_id << std::setw(7)
        << (r.test_split ? "test" : "train") << std::right << std::setw(10) << r.vd
        << std::setw(10) << r.vd_gpm << std::setw(12) << r.vd_gnn << std::setw(9) << r.vd_pct
        << std::setw(10) << r.civd << std::setw(11) << r.civd_gpm << std::setw(12) << r.civd_gnn
        << std::setw(9) << r.civd_pct << "\n";
}

namespace {

void write_rect_feature(std::ostream& out, double x0, double y0, double x1, double y1,
                        const std::string& props, bool first) {
  if (!first) out << ",";
  out << "{\"type\":\"Feature\",\"properties\":{" << props
      << "},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[[" << x0 << "," << y0 << "],["
      << x1 << "," << y0 << "],[" << x1 << "," << y1 << "],[" << x0 << "," << y1 << "],[" << x0
      << "," << y0 << "]]]}}";
}

}  // namespace

SyntheticOutput generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                                   const std::filesystem::path& out_dir) {
  if (spec.n_train + spec.n_test < 1) throw std::invalid_argument("synthetic: need >= 1 region");
  if (spec.facilities_per_region < 1)
    throw std::invalid_argument("synthetic: need >= 1 facility per region");
  if (spec.intensities.empty()) throw std::invalid_argument("synthetic: no classes");
  if (spec.blocks_per_side < 1 || spec.region_size <= 0 || spec.cells_per_region < 1)
    throw std::invalid_argument("synthetic: infeasible geometry");
  bool any_positive = std::any_of(spec.intensities.begin(), spec.intensities.end(),
                                  [](const auto& p) { return p.second > 0; });
  if (!any_positive) throw std::invalid_argument("synthetic: all planted intensities are zero");

  std::filesystem::create_directories(out_dir);
  SyntheticOutput out;
  out.region_file = out_dir / "regions.geojson";
  out.landuse_file = out_dir / "landuse.geojson";
  out.indicators_file = out_dir / "indicators.csv";
  out.facilities_file = out_dir / "facilities.csv";
  out.planted_weights_file = out_dir / "planted_weights.csv";

  const std::size_t n_regions = spec.n_train + spec.n_test;
  const double gap = spec.region_size * 0.25;
  const double block = spec.region_size / static_cast<double>(spec.blocks_per_side);

  std::vector<std::string> class_names;
  for (const auto& [cls, intensity] : spec.intensities) class_names.push_back(cls);

  // region and land-use geometry
  std::ofstream rf(out.region_file);
  std::ofstream lf(out.landuse_file);
  rf << std::setprecision(17)
     << "{\"type\":\"FeatureCollection\",\"crs_note\":\"synthetic planar meters\","
        "\"features\":[";
  lf << std::setprecision(17) << "{\"type\":\"FeatureCollection\",\"features\":[";

  struct RegionPlan {
    std::string id;
    double x0, y0;
    std::vector<std::size_t> block_class;  // row-major, blocks_per_side^2
    std::vector<std::size_t> anchors;      // block indices hosting facilities
  };
  std::vector<RegionPlan> plans;
  bool first_patch = true;
  for (std::size_t r = 0; r < n_regions; ++r) {
    RegionPlan plan;
    plan.id = "R" + std::to_string(r);
    plan.x0 = static_cast<double>(r) * (spec.region_size + gap);
    plan.y0 = 0.0;
    write_rect_feature(rf, plan.x0, plan.y0, plan.x0 + spec.region_size,
                       plan.y0 + spec.region_size, "\"id\":\"" + plan.id + "\"", r == 0);

    std::mt19937_64 rng(seed_for(seed, "blocks:" + plan.id));
    // zero-intensity classes are over-sampled: most of a realistic region is
    // undeveloped land that should carry no allocation weight
    std::vector<double> pick_weight;
    std::vector<std::size_t> positive_classes, zero_classes;
    for (std::size_t c = 0; c < spec.intensities.size(); ++c) {
      pick_weight.push_back(spec.intensities[c].second > 0 ? 1.0 : 9.0);
      (spec.intensities[c].second > 0 ? positive_classes : zero_classes).push_back(c);
    }
    std::discrete_distribution<std::size_t> pick(pick_weight.begin(), pick_weight.end());
    const std::size_t n_blocks = spec.blocks_per_side * spec.blocks_per_side;
    for (std::size_t b = 0; b < n_blocks; ++b) plan.block_class.push_back(pick(rng));

    // facility anchor blocks: developed blocks attract substations. Load is
    // concentrated there too: with undeveloped classes available, anchor
    // blocks are exactly the developed ones.
    const std::size_t n_anchors = std::min<std::size_t>(
        n_blocks, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(
                         static_cast<double>(spec.facilities_per_region))))));
    std::vector<double> block_weight(n_blocks, 1.0);
    std::mt19937_64 arng(seed_for(seed, "anchors:" + plan.id));
    for (std::size_t a = 0; a < n_anchors; ++a) {
      std::discrete_distribution<std::size_t> pick_block(block_weight.begin(),
                                                         block_weight.end());
      std::size_t b = pick_block(arng);
      plan.anchors.push_back(b);
      block_weight[b] = 0;
    }
    // distinct developed classes across anchors, so the load carried by the
    // different facility neighborhoods differs materially
    std::shuffle(positive_classes.begin(), positive_classes.end(), arng);
    for (std::size_t a = 0; a < plan.anchors.size(); ++a)
      plan.block_class[plan.anchors[a]] = positive_classes[a % positive_classes.size()];
    if (!zero_classes.empty()) {
      for (std::size_t b = 0; b < n_blocks; ++b) {
        bool anchored = std::find(plan.anchors.begin(), plan.anchors.end(), b) !=
                        plan.anchors.end();
        if (!anchored && spec.intensities[plan.block_class[b]].second > 0)
          plan.block_class[b] = zero_classes[b % zero_classes.size()];
      }
    }

    for (std::size_t by = 0; by < spec.blocks_per_side; ++by)
      for (std::size_t bx = 0; bx < spec.blocks_per_side; ++bx) {
        std::size_t cls = plan.block_class[by * spec.blocks_per_side + bx];
        write_rect_feature(lf, plan.x0 + bx * block, plan.y0 + by * block,
                           plan.x0 + (bx + 1) * block, plan.y0 + (by + 1) * block,
                           "\"class\":\"" + class_names[cls] + "\"", first_patch);
        first_patch = false;
      }
    plans.push_back(std::move(plan));
  }
  rf << "]}";
  lf << "]}";
  rf.close();
  lf.close();

  // indicator columns: one gva_<class> per positive-intensity non-residential
  // class; residential mass maps to population
  std::vector<std::string> gva_classes;
  for (const auto& [cls, intensity] : spec.intensities)
    if (intensity > 0 && cls != "residential") gva_classes.push_back(cls);

  std::ofstream indf(out.indicators_file);
  indf << std::setprecision(17) << "region_id,population,total_volume";
  for (const std::string& cls : gva_classes) indf << ",gva_" << cls;
  indf << "\n";

  std::ofstream facf(out.facilities_file);
  facf << std::setprecision(17) << "id,region_id,x,y,ground_truth_demand\n";

  std::ofstream pwf(out.planted_weights_file);
  pwf << std::setprecision(17) << "region_id,cell_id,weight\n";

  std::map<std::string, double> intensity_of;
  for (const auto& [cls, intensity] : spec.intensities) intensity_of[cls] = intensity;

  for (std::size_t r = 0; r < n_regions; ++r) {
    const RegionPlan& plan = plans[r];
    double volume = spec.base_volume * static_cast<double>(r + 1);

    // rebuild the region and land-use exactly as geo-ingest will see them,
    // then derive cells with the same grid generator
    Region region;
    region.id = plan.id;
    Ring outer{{plan.x0, plan.y0},
               {plan.x0 + spec.region_size, plan.y0},
               {plan.x0 + spec.region_size, plan.y0 + spec.region_size},
               {plan.x0, plan.y0 + spec.region_size}};
    region.boundary.push_back(Polygon{outer, {}});
    region.total_volume = volume;

    LandUseMap landuse;
    landuse.class_set = class_names;
    for (std::size_t by = 0; by < spec.blocks_per_side; ++by)
      for (std::size_t bx = 0; bx < spec.blocks_per_side; ++bx) {
        Ring br{{plan.x0 + bx * block, plan.y0 + by * block},
                {plan.x0 + (bx + 1) * block, plan.y0 + by * block},
                {plan.x0 + (bx + 1) * block, plan.y0 + (by + 1) * block},
                {plan.x0 + bx * block, plan.y0 + (by + 1) * block}};
        landuse.patches.push_back(
            {{Polygon{br, {}}}, plan.block_class[by * spec.blocks_per_side + bx]});
      }

    std::vector<GridCell> cells = generate_grid(region, landuse, spec.cells_per_region, 1.0);
    if (cells.empty()) throw std::runtime_error("synthetic: region produced no cells");

    // planted weights proportional to the dominant class intensity
    std::vector<double> planted(cells.size());
    double mass = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      planted[i] = intensity_of.at(class_names[cells[i].dominant_class]);
      mass += planted[i];
    }
    if (mass <= 0) throw std::runtime_error("synthetic: region carries no planted mass");
    for (double& w : planted) w /= mass;
    for (std::size_t i = 0; i < cells.size(); ++i)
      pwf << plan.id << "," << cells[i].id << "," << planted[i] << "\n";

    // per-class planted mass shares double as the socioeconomic indicators
    std::map<std::string, double> class_mass;
    for (std::size_t i = 0; i < cells.size(); ++i)
      class_mass[class_names[cells[i].dominant_class]] += planted[i];
    indf << plan.id << "," << class_mass["residential"] * spec.indicator_scale << "," << volume;
    for (const std::string& cls : gva_classes)
      indf << "," << class_mass[cls] * spec.indicator_scale;
    indf << "\n";

    // facilities sampled inside the region, demands from exact VD over the
    // planted weights
    // facility sites: seeded sampling of load anchors (dense blocks attract
    // substations), each anchor hosting a small ring of facilities
    std::mt19937_64 rng(seed_for(seed, "facilities:" + plan.id));
    const std::size_t n_fac = spec.facilities_per_region;
    const std::size_t n_anchors = plan.anchors.size();
    const std::vector<std::size_t>& anchors = plan.anchors;
    std::uniform_real_distribution<double> phase(0.0, 2 * 3.14159265358979323846);
    std::vector<double> anchor_phase(n_anchors);
    std::vector<std::size_t> anchor_members(n_anchors, 0), member_rank(n_fac);
    for (double& p : anchor_phase) p = phase(rng);
    for (std::size_t f = 0; f < n_fac; ++f) member_rank[f] = anchor_members[f % n_anchors]++;
    std::vector<Facility> facilities;
    for (std::size_t f = 0; f < n_fac; ++f) {
      std::size_t a = f % n_anchors;
      double cx = (static_cast<double>(anchors[a] % spec.blocks_per_side) + 0.5) * block;
      double cy = (static_cast<double>(anchors[a] / spec.blocks_per_side) + 0.5) * block;
      double radius = 0.03 * block;
      double ang = anchor_phase[a] + 2 * 3.14159265358979323846 *
                                         static_cast<double>(member_rank[f]) /
                                         static_cast<double>(anchor_members[a]);
      Facility fac;
      fac.id = plan.id + "F" + std::to_string(f);
      fac.region_id = plan.id;
      fac.location = {plan.x0 + cx + radius * std::cos(ang),
                      plan.y0 + cy + radius * std::sin(ang)};
      facilities.push_back(std::move(fac));
    }
    std::vector<std::size_t> nearest = assign_vd(cells, facilities);
    std::vector<double> demand(facilities.size(), 0.0);
    for (std::size_t i = 0; i < cells.size(); ++i)
      demand[nearest[i]] += volume * planted[i];
    for (std::size_t f = 0; f < facilities.size(); ++f)
      facf << facilities[f].id << "," << plan.id << "," << facilities[f].location.x << ","
           << facilities[f].location.y << "," << demand[f] << "\n";

    if (r < spec.n_train)
      out.train_region_ids.push_back(plan.id);
    else
      out.test_region_ids.push_back(plan.id);
  }

  return out;
}

std::map<std::string, double> load_planted_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::map<std::string, double> weights;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("malformed planted weights row: " + line);
    weights[line.substr(c1 + 1, c2 - c1 - 1)] = std::stod(line.substr(c2 + 1));
  }
  return weights;
}

namespace {

// Average ranks with ties sharing the mean rank of their run.
std::vector<double> tied_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

WeightQuality weight_quality(const std::vector<double>& predicted,
                             const std::vector<double>& planted) {
  if (predicted.size() != planted.size() || predicted.empty())
    throw std::invalid_argument("weight_quality: vectors must align and be nonempty");
  WeightQuality out;

  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (!constant(predicted) && !constant(planted)) {
    std::vector<double> ra = tied_ranks(predicted);
    std::vector<double> rb = tied_ranks(planted);
    double n = static_cast<double>(ra.size());
    double mean = (n + 1) / 2.0;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      cov += (ra[i] - mean) * (rb[i] - mean);
      va += (ra[i] - mean) * (ra[i] - mean);
      vb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (va > 0 && vb > 0) out.spearman = cov / std::sqrt(va * vb);
  }

  std::size_t m = std::max<std::size_t>(1, predicted.size() / 10);
  auto top_set = [&](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return v[a] != v[b] ? v[a] > v[b] : a < b;
    });
    order.resize(m);
    std::sort(order.begin(), order.end());
    return order;
  };
  std::vector<std::size_t> ta = top_set(predicted), tb = top_set(planted);
  std::vector<std::size_t> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  out.top_decile_overlap = static_cast<double>(common.size()) / static_cast<double>(m);
  return out;
}

}  // namespace gridalloc
