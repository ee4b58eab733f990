#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "gridalloc/graph.hpp"

using namespace gridalloc;

namespace {

Region square_region(const std::string& id, double x0, double size, double pop = 100,
                     std::vector<double> gva = {50, 25}) {
  Region r;
  r.id = id;
  r.boundary = {{{{x0, 0}, {x0 + size, 0}, {x0 + size, size}, {x0, size}}, {}}};
  r.population = pop;
  r.gva = std::move(gva);
  r.total_volume = 10;
  return r;
}

GridCell cell(const std::string& id, const std::string& region_id, double x, double y,
              std::vector<double> fractions, std::size_t dominant) {
  GridCell c;
  c.id = id;
  c.region_id = region_id;
  c.centroid = {x, y};
  c.side = 1.0;
  c.fractions = std::move(fractions);
  c.dominant_class = dominant;
  return c;
}

const std::vector<std::string> kClasses{"residential", "industrial"};

}  // namespace

TEST_CASE("single region with four cells gives four edge pairs") {
  std::vector<Region> regions{square_region("A", 0, 10)};
  std::vector<GridCell> cells;
  for (int i = 0; i < 4; ++i)
    cells.push_back(cell("c" + std::to_string(i), "A", 1 + i, 1, {1, 0}, 0));
  auto built = build_graph(regions, cells, kClasses);
  CHECK(built.graph.edges_sa.size() == 4);
  CHECK(built.graph.edges_as.size() == 4);
  CHECK(built.warnings.empty());
  CHECK(built.graph.n_sources() == 1);
  CHECK(built.graph.n_agents() == 4);
}

TEST_CASE("two regions never share edges; neighborhood sizes match") {
  std::vector<Region> regions{square_region("A", 0, 10), square_region("B", 20, 10)};
  std::vector<GridCell> cells;
  for (int i = 0; i < 3; ++i) cells.push_back(cell("a" + std::to_string(i), "A", i + 1, 1, {1, 0}, 0));
  for (int i = 0; i < 5; ++i) cells.push_back(cell("b" + std::to_string(i), "B", 21 + i, 1, {0, 1}, 1));
  auto built = build_graph(regions, cells, kClasses);
  CHECK(neighborhood(built.graph, 0).size() == 3);
  CHECK(neighborhood(built.graph, 1).size() == 5);
  for (const auto& [s, a] : built.graph.edges_sa) {
    // cells 0..2 belong to region 0, cells 3..7 to region 1
    CHECK(s == (a < 3 ? 0u : 1u));
  }
}

TEST_CASE("edges_as is the exact reversal of edges_sa") {
  std::vector<Region> regions{square_region("A", 0, 10), square_region("B", 20, 10)};
  std::vector<GridCell> cells;
  for (int i = 0; i < 6; ++i)
    cells.push_back(cell("c" + std::to_string(i), i % 2 ? "A" : "B", 1, 1, {1, 0}, 0));
  auto built = build_graph(regions, cells, kClasses);
  auto sa = built.graph.edges_sa;
  auto as = built.graph.edges_as;
  REQUIRE(sa.size() == as.size());
  for (auto& [a, s] : as) std::swap(a, s);
  std::sort(sa.begin(), sa.end());
  std::sort(as.begin(), as.end());
  CHECK(sa == as);
}

TEST_CASE("neighborhoods partition the agent set") {
  std::vector<Region> regions{square_region("A", 0, 10), square_region("B", 20, 10),
                              square_region("C", 40, 10)};
  std::vector<GridCell> cells;
  const char* owners[] = {"B", "A", "C", "A", "B", "B", "C"};
  for (int i = 0; i < 7; ++i)
    cells.push_back(cell("c" + std::to_string(i), owners[i], 1, 1, {1, 0}, 0));
  auto built = build_graph(regions, cells, kClasses);
  std::vector<std::size_t> all;
  for (std::size_t s = 0; s < built.graph.n_sources(); ++s) {
    auto n = neighborhood(built.graph, s);
    CHECK(std::is_sorted(n.begin(), n.end()));
    all.insert(all.end(), n.begin(), n.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) expected[i] = i;
  CHECK(all == expected);
}

TEST_CASE("region without cells is warned about, not fatal") {
  std::vector<Region> regions{square_region("A", 0, 10), square_region("EMPTY", 20, 10)};
  std::vector<GridCell> cells{cell("c0", "A", 1, 1, {1, 0}, 0)};
  auto built = build_graph(regions, cells, kClasses);
  REQUIRE(built.warnings.size() == 1);
  CHECK(built.warnings[0].find("EMPTY") != std::string::npos);
  CHECK(neighborhood(built.graph, 1).empty());
}

TEST_CASE("unknown cell region is an error") {
  std::vector<Region> regions{square_region("A", 0, 10)};
  std::vector<GridCell> cells{cell("c0", "GHOST", 1, 1, {1, 0}, 0)};
  CHECK_THROWS_WITH_AS(build_graph(regions, cells, kClasses), doctest::Contains("GHOST"),
                       std::runtime_error);
}

TEST_CASE("source features are indicator shares") {
  std::vector<Region> regions{square_region("A", 0, 10, 100, {50, 50})};
  std::vector<GridCell> cells{cell("c0", "A", 1, 1, {1, 0}, 0)};
  auto built = build_graph(regions, cells, kClasses);
  const Tensor& sf = built.graph.source_features;
  REQUIRE(sf.n_cols == 3);  // population + two gva categories
  CHECK(sf.at(0, 0) == doctest::Approx(0.5));
  CHECK(sf.at(0, 1) == doctest::Approx(0.25));
  CHECK(sf.at(0, 2) == doctest::Approx(0.25));
  CHECK(built.spec.source_normalizers[0] == doctest::Approx(200.0));
}

TEST_CASE("agent features are fractions followed by the dominant one-hot") {
  std::vector<Region> regions{square_region("A", 0, 10)};
  std::vector<GridCell> cells{cell("c0", "A", 1, 1, {0.25, 0.5}, 1)};
  auto built = build_graph(regions, cells, kClasses);
  const Tensor& af = built.graph.agent_features;
  REQUIRE(af.n_cols == 4);  // 2 fractions + 2 one-hot slots
  CHECK(af.at(0, 0) == doctest::Approx(0.25));
  CHECK(af.at(0, 1) == doctest::Approx(0.5));
  CHECK(af.at(0, 2) == 0.0);
  CHECK(af.at(0, 3) == 1.0);
}

TEST_CASE("zero-indicator region maps to zero features, not NaN") {
  std::vector<Region> regions{square_region("Z", 0, 10, 0, {0, 0})};
  std::vector<GridCell> cells{cell("c0", "Z", 1, 1, {1, 0}, 0)};
  auto built = build_graph(regions, cells, kClasses);
  CHECK(built.graph.source_features.all_finite());
  for (double v : built.graph.source_features.data) CHECK(v == 0.0);
}

TEST_CASE("neighborhood rejects out-of-range sources") {
  std::vector<Region> regions{square_region("A", 0, 10)};
  std::vector<GridCell> cells{cell("c0", "A", 1, 1, {1, 0}, 0)};
  auto built = build_graph(regions, cells, kClasses);
  CHECK_THROWS_AS(neighborhood(built.graph, 5), std::out_of_range);
}

TEST_CASE("graph json round-trips") {
  std::vector<Region> regions{square_region("A", 0, 10), square_region("B", 20, 10)};
  std::vector<GridCell> cells;
  for (int i = 0; i < 4; ++i)
    cells.push_back(cell("c" + std::to_string(i), i % 2 ? "A" : "B", 1, 1, {0.3, 0.6}, 1));
  auto built = build_graph(regions, cells, kClasses);
  std::filesystem::path p =
      std::filesystem::temp_directory_path() / "gridalloc_graph_roundtrip.json";
  save_graph_json(p, built.graph, built.spec);
  auto [g2, spec2] = load_graph_json(p);
  CHECK(g2.edges_sa == built.graph.edges_sa);
  CHECK(g2.edges_as == built.graph.edges_as);
  CHECK(g2.source_ids == built.graph.source_ids);
  CHECK(g2.agent_ids == built.graph.agent_ids);
  CHECK(g2.source_features.data == built.graph.source_features.data);
  CHECK(g2.agent_features.data == built.graph.agent_features.data);
  CHECK(spec2.source_layout == built.spec.source_layout);
  CHECK(spec2.agent_layout == built.spec.agent_layout);
}
