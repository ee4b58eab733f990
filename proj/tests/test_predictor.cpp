#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "gridalloc/predictor.hpp"
#include "gridalloc/rng.hpp"

using namespace gridalloc;

namespace {

void zero_params(PredictorParams& p) {
  for (auto& [name, t] : p.named_tensors())
    for (double& v : t->data) v = 0.0;
}

HeteroGraph tiny_graph(std::size_t n_s, std::size_t n_a, std::mt19937_64& rng) {
  HeteroGraph g;
  g.source_features = Tensor(n_s, 3);
  g.agent_features = Tensor(n_a, 4);
  fill_uniform(g.source_features, -1, 1, rng);
  fill_uniform(g.agent_features, -1, 1, rng);
  std::uniform_int_distribution<std::size_t> pick_s(0, n_s - 1);
  for (std::size_t a = 0; a < n_a; ++a) {
    std::size_t s = pick_s(rng);
    g.edges_sa.push_back({s, a});
    g.edges_as.push_back({a, s});
  }
  for (std::size_t s = 0; s < n_s; ++s) g.source_ids.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < n_a; ++a) g.agent_ids.push_back("a" + std::to_string(a));
  return g;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("cost is zero for identical embeddings regardless of the gate") {
  PredictorParams p = init_predictor_params(2, 3);
  Tensor h = Tensor::from_rows({{0.7, -0.3}});
  auto costs = relation_cost(h, h, {{0, 0}}, p);
  REQUIRE(costs.size() == 1);
  CHECK(costs[0] == 0.0);
}

TEST_CASE("zero MLP gives gate one half") {
  PredictorParams p = init_predictor_params(2, 3);
  zero_params(p);
  Tensor hs = Tensor::from_rows({{1.0, 0.0}});
  Tensor ha = Tensor::from_rows({{0.0, 1.0}});
  auto costs = relation_cost(hs, ha, {{0, 0}}, p);
  CHECK(costs[0] == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("gate forced open yields the raw distance") {
  PredictorParams p = init_predictor_params(2, 3);
  zero_params(p);
  p.b2.data[0] = 1000.0;  // saturates the sigmoid to 1 in double precision
  Tensor hs = Tensor::from_rows({{1.0, 0.0}});
  Tensor ha = Tensor::from_rows({{0.0, 1.0}});
  auto costs = relation_cost(hs, ha, {{0, 0}}, p);
  CHECK(costs[0] == std::sqrt(2.0));
}

TEST_CASE("cost is nonnegative on random inputs") {
  std::mt19937_64 rng(17);
  PredictorParams p = init_predictor_params(4, 23);
  Tensor hs(5, 4), ha(7, 4);
  fill_uniform(hs, -2, 2, rng);
  fill_uniform(ha, -2, 2, rng);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t a = 0; a < 7; ++a) edges.push_back({s, a});
  for (double c : relation_cost(hs, ha, edges, p)) CHECK(c >= 0.0);
}

TEST_CASE("grouped softmax hand cases") {
  SUBCASE("equal costs share equally") {
    auto f = grouped_softmax({2.0, 2.0, 2.0}, {0, 0, 0}, 0.5);
    for (double w : f.weights) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("costs 0 and 1 at tau 1") {
    // extended-precision direct evaluation: e^0/(e^0+e^-1), e^-1/(e^0+e^-1)
    long double z = 1.0L + std::exp(-1.0L);
    auto f = grouped_softmax({0.0, 1.0}, {0, 0}, 1.0);
    CHECK(f.weights[0] == doctest::Approx(static_cast<double>(1.0L / z)).epsilon(1e-12));
    CHECK(f.weights[1] ==
          doctest::Approx(static_cast<double>(std::exp(-1.0L) / z)).epsilon(1e-12));
    CHECK(f.weights[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(f.weights[1] == doctest::Approx(0.2689).epsilon(1e-4));
  }
  SUBCASE("small temperature approaches winner-take-all") {
    auto f = grouped_softmax({0.0, 10.0}, {0, 0}, 0.01);
    CHECK(std::abs(f.weights[0] - 1.0) < 1e-40);
    CHECK(f.weights[1] < 1e-40);
  }
  SUBCASE("independent groups") {
    auto f = grouped_softmax({0.0, 0.0, 5.0}, {0, 1, 0}, 1.0);
    CHECK(f.weights[1] == doctest::Approx(1.0));
    CHECK(f.weights[0] + f.weights[2] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("nonpositive temperature rejected") {
    CHECK_THROWS(grouped_softmax({0.0}, {0}, 0.0));
    CHECK_THROWS(grouped_softmax({0.0}, {0}, -1.0));
  }
}

TEST_CASE("grouped softmax properties on random inputs") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> cost_dist(-5, 5);
  for (int rep = 0; rep < 200; ++rep) {
    std::uniform_int_distribution<std::size_t> n_dist(1, 30), g_dist(0, 3);
    std::size_t n = n_dist(rng);
    std::vector<double> costs(n);
    std::vector<std::size_t> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
      costs[i] = cost_dist(rng);
      groups[i] = g_dist(rng);
    }
    auto f = grouped_softmax(costs, groups, 0.5);
    std::map<std::size_t, double> sums;
    for (std::size_t i = 0; i < n; ++i) sums[groups[i]] += f.weights[i];
    for (const auto& [g, s] : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    // monotonicity within each group
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (groups[i] == groups[j] && costs[i] < costs[j])
          CHECK(f.weights[i] > f.weights[j]);
    // shift invariance per group
    std::vector<double> shifted = costs;
    for (std::size_t i = 0; i < n; ++i) shifted[i] += 7.25;
    auto f2 = grouped_softmax(shifted, groups, 0.5);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(f2.weights[i] == doctest::Approx(f.weights[i]).epsilon(1e-12));
  }
}

TEST_CASE("temperature limits") {
  std::vector<double> costs{0.3, 1.7, 0.9, 2.4};
  std::vector<std::size_t> groups{0, 0, 0, 0};
  auto hot = grouped_softmax(costs, groups, 1e6);
  for (double w : hot.weights) CHECK(std::abs(w - 0.25) < 1e-3);
  auto cold = grouped_softmax(costs, groups, 1e-3);
  CHECK(cold.weights[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("predict_weights basics") {
  std::mt19937_64 rng(31);
  EncoderParams enc = init_encoder_params(3, 4, 8, 2, 1, 3);
  PredictorParams pred = init_predictor_params(8, 4);

  SUBCASE("single edge gets weight exactly 1") {
    HeteroGraph g = tiny_graph(1, 1, rng);
    auto f = predict_weights(g, enc, pred, 0.5);
    REQUIRE(f.weights.size() == 1);
    CHECK(f.weights[0] == 1.0);
  }

  SUBCASE("identical agents get identical weights") {
    HeteroGraph g = tiny_graph(1, 3, rng);
    for (std::size_t a = 1; a < 3; ++a)
      for (std::size_t c = 0; c < 4; ++c)
        g.agent_features.at(a, c) = g.agent_features.at(0, c);
    auto f = predict_weights(g, enc, pred, 0.5);
    CHECK(f.weights[0] == doctest::Approx(f.weights[1]).epsilon(1e-9));
    CHECK(f.weights[1] == doctest::Approx(f.weights[2]).epsilon(1e-9));
  }
}

TEST_CASE("predict_weights matches a straight-line reimplementation") {
  std::mt19937_64 rng(37);
  HeteroGraph g = tiny_graph(2, 6, rng);
  EncoderParams enc = init_encoder_params(3, 4, 8, 2, 2, 41);
  PredictorParams pred = init_predictor_params(8, 43);
  double tau = 0.7;

  auto field = predict_weights(g, enc, pred, tau);

  // independent recomputation from the final embeddings
  auto [hs, ha] = encode(g, enc);
  std::size_t d = enc.dim;
  std::vector<double> costs;
  for (const auto& [s, a] : g.edges_sa) {
    std::vector<double> x(2 * d);
    for (std::size_t c = 0; c < d; ++c) {
      x[c] = hs.at(s, c);
      x[d + c] = ha.at(a, c);
    }
    std::vector<double> hidden(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double acc = pred.b1.at(0, j);
      for (std::size_t i = 0; i < 2 * d; ++i) acc += x[i] * pred.w1.at(i, j);
      hidden[j] = std::max(acc, 0.0);
    }
    double logit = pred.b2.at(0, 0);
    for (std::size_t j = 0; j < d; ++j) logit += hidden[j] * pred.w2.at(j, 0);
    double dist = 0;
    for (std::size_t c = 0; c < d; ++c) {
      double diff = hs.at(s, c) - ha.at(a, c);
      dist += diff * diff;
    }
    costs.push_back(sigmoid(logit) * std::sqrt(dist));
  }
  std::map<std::size_t, double> z;
  std::vector<double> expected(costs.size());
  std::map<std::size_t, double> group_min;
  for (std::size_t e = 0; e < costs.size(); ++e) {
    std::size_t s = g.edges_sa[e].first;
    group_min.try_emplace(s, costs[e]);
    group_min[s] = std::min(group_min[s], costs[e]);
  }
  for (std::size_t e = 0; e < costs.size(); ++e) {
    std::size_t s = g.edges_sa[e].first;
    expected[e] = std::exp(-(costs[e] - group_min[s]) / tau);
    z[s] += expected[e];
  }
  for (std::size_t e = 0; e < costs.size(); ++e) expected[e] /= z[g.edges_sa[e].first];

  REQUIRE(field.weights.size() == expected.size());
  for (std::size_t e = 0; e < expected.size(); ++e)
    CHECK(field.weights[e] == doctest::Approx(expected[e]).epsilon(1e-9));
}

TEST_CASE("gradient of weights with respect to gate parameters") {
  std::mt19937_64 rng(47);
  HeteroGraph g = tiny_graph(2, 5, rng);
  EncoderParams enc = init_encoder_params(3, 4, 4, 2, 1, 51);
  PredictorParams pred = init_predictor_params(4, 53);
  Tensor probe(g.edges_sa.size(), 1);
  fill_uniform(probe, 0.1, 1.0, rng);

  auto loss_value = [&](const PredictorParams& pp) {
    Tape t;
    TapeEncoderParams te = put_encoder_on_tape(t, enc);
    TapePredictorParams tp = put_predictor_on_tape(t, pp);
    PredictNodes n = predict_weights_on_tape(t, g, te, tp, 0.5);
    return t.value(t.sum(t.mul(n.weights, t.leaf(probe)))).at(0, 0);
  };

  Tape t;
  TapeEncoderParams te = put_encoder_on_tape(t, enc);
  TapePredictorParams tp = put_predictor_on_tape(t, pred);
  PredictNodes n = predict_weights_on_tape(t, g, te, tp, 0.5);
  t.backward(t.sum(t.mul(n.weights, t.leaf(probe))));

  auto named = pred.named_tensors();
  REQUIRE(named.size() == tp.all.size());
  double h = 1e-6;
  for (std::size_t pi = 0; pi < named.size(); ++pi) {
    Tensor& param = *named[pi].second;
    const Tensor& analytic = t.grad(tp.all[pi]);
    REQUIRE_FALSE(analytic.data.empty());
    for (std::size_t i = 0; i < param.size(); i += std::max<std::size_t>(1, param.size() / 3)) {
      double keep = param.data[i];
      param.data[i] = keep + h;
      double up = loss_value(pred);
      param.data[i] = keep - h;
      double down = loss_value(pred);
      param.data[i] = keep;
      double fd = (up - down) / (2 * h);
      double scale = std::max({1.0, std::abs(fd), std::abs(analytic.data[i])});
      CHECK(std::abs(fd - analytic.data[i]) / scale < 1e-4);
    }
  }
}

TEST_CASE("weights csv and checkpoint round-trips") {
  std::mt19937_64 rng(61);
  HeteroGraph g = tiny_graph(2, 4, rng);
  EncoderParams enc = init_encoder_params(3, 4, 8, 2, 1, 63);
  PredictorParams pred = init_predictor_params(8, 65);
  auto f = predict_weights(g, enc, pred, 0.5);

  auto dir = std::filesystem::temp_directory_path();
  save_weights_csv(dir / "gridalloc_weights.csv", g, f);
  auto f2 = load_weights_csv(dir / "gridalloc_weights.csv", g);
  REQUIRE(f2.weights.size() == f.weights.size());
  for (std::size_t i = 0; i < f.weights.size(); ++i)
    CHECK(f2.weights[i] == doctest::Approx(f.weights[i]).epsilon(1e-12));

  save_predictor_checkpoint(dir / "gridalloc_pred.json", pred);
  PredictorParams p2 = load_predictor_checkpoint(dir / "gridalloc_pred.json");
  CHECK(p2.w1.data == pred.w1.data);
  CHECK(p2.b1.data == pred.b1.data);
  CHECK(p2.w2.data == pred.w2.data);
  CHECK(p2.b2.data == pred.b2.data);
}
