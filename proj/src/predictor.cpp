#include "gridalloc/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <stdexcept>

#include "gridalloc/rng.hpp"

namespace gridalloc {

std::vector<std::pair<std::string, Tensor*>> PredictorParams::named_tensors() {
  return {{"gate.w1", &w1}, {"gate.b1", &b1}, {"gate.w2", &w2}, {"gate.b2", &b2}};
}

std::vector<std::pair<std::string, const Tensor*>> PredictorParams::named_tensors() const {
  auto mv = const_cast<PredictorParams*>(this)->named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : mv) out.emplace_back(name, t);
  return out;
}

PredictorParams init_predictor_params(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PredictorParams p;
  p.w1 = Tensor(2 * d, d);
  p.b1 = Tensor(1, d);
  p.w2 = Tensor(d, 1);
  p.b2 = Tensor(1, 1);
  double bound1 = 1.0 / std::sqrt(static_cast<double>(2 * d));
  double bound2 = 1.0 / std::sqrt(static_cast<double>(d));
  fill_uniform(p.w1, -bound1, bound1, rng);
  fill_uniform(p.b1, -bound1, bound1, rng);
  fill_uniform(p.w2, -bound2, bound2, rng);
  fill_uniform(p.b2, -bound2, bound2, rng);
  return p;
}

TapePredictorParams put_predictor_on_tape(Tape& tape, const PredictorParams& params) {
  TapePredictorParams tp;
  tp.w1 = tape.leaf(params.w1);
  tp.b1 = tape.leaf(params.b1);
  tp.w2 = tape.leaf(params.w2);
  tp.b2 = tape.leaf(params.b2);
  tp.all = {tp.w1, tp.b1, tp.w2, tp.b2};
  return tp;
}

Tape::NodeId relation_cost_on_tape(Tape& tape, Tape::NodeId h_source, Tape::NodeId h_agent,
                                   const std::vector<std::size_t>& edge_src,
                                   const std::vector<std::size_t>& edge_agent,
                                   const TapePredictorParams& p) {
  Tape::NodeId hs_e = tape.gather_rows(h_source, edge_src);
  Tape::NodeId ha_e = tape.gather_rows(h_agent, edge_agent);
  Tape::NodeId x = tape.concat_rows(hs_e, ha_e);
  Tape::NodeId hidden = tape.relu(tape.add(tape.matmul(x, p.w1), p.b1));
  Tape::NodeId gate = tape.sigmoid(tape.add(tape.matmul(hidden, p.w2), p.b2));
  Tape::NodeId dist = tape.row_l2_distance(hs_e, ha_e);
  return tape.mul(gate, dist);
}

std::vector<double> relation_cost(const Tensor& h_source, const Tensor& h_agent,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                  const PredictorParams& params) {
  std::vector<std::size_t> es, ea;
  for (const auto& [s, a] : edges) {
    es.push_back(s);
    ea.push_back(a);
  }
  Tape tape;
  TapePredictorParams tp = put_predictor_on_tape(tape, params);
  Tape::NodeId hs = tape.leaf(h_source);
  Tape::NodeId ha = tape.leaf(h_agent);
  Tape::NodeId costs = relation_cost_on_tape(tape, hs, ha, es, ea, tp);
  const Tensor& c = tape.value(costs);
  return c.data;
}

EdgeWeightField grouped_softmax(const std::vector<double>& costs,
                                const std::vector<std::size_t>& groups, double tau) {
  if (tau <= 0) throw std::invalid_argument("grouped_softmax: tau must be positive");
  if (costs.size() != groups.size())
    throw std::invalid_argument("grouped_softmax: costs and groups differ in length");
  Tape tape;
  Tensor c(costs.size(), 1);
  c.data = costs;
  Tape::NodeId w = tape.grouped_neg_softmax(tape.leaf(std::move(c)), groups, tau);
  EdgeWeightField field;
  field.weights = tape.value(w).data;
  field.tau = tau;
  field.groups = groups;
  return field;
}

PredictNodes predict_weights_on_tape(Tape& tape, const HeteroGraph& g,
                                     const TapeEncoderParams& enc,
                                     const TapePredictorParams& pred, double tau) {
  std::vector<std::size_t> edge_src(g.edges_sa.size()), edge_agent(g.edges_sa.size());
  for (std::size_t e = 0; e < g.edges_sa.size(); ++e) {
    edge_src[e] = g.edges_sa[e].first;
    edge_agent[e] = g.edges_sa[e].second;
  }
  PredictNodes out;
  out.encode = encode_on_tape(tape, g, enc);
  Tape::NodeId costs =
      relation_cost_on_tape(tape, out.encode.h_source, out.encode.h_agent, edge_src, edge_agent, pred);
  out.weights = tape.grouped_neg_softmax(costs, edge_src, tau);
  return out;
}

EdgeWeightField predict_weights(const HeteroGraph& g, const EncoderParams& encoder,
                                const PredictorParams& predictor, double tau) {
  Tape tape;
  TapeEncoderParams enc = put_encoder_on_tape(tape, encoder);
  TapePredictorParams pred = put_predictor_on_tape(tape, predictor);
  PredictNodes nodes = predict_weights_on_tape(tape, g, enc, pred, tau);
  EdgeWeightField field;
  field.weights = tape.value(nodes.weights).data;
  field.tau = tau;
  for (const auto& [s, a] : g.edges_sa) field.groups.push_back(s);
  return field;
}

namespace {

using nlohmann::json;

}  // namespace

void save_predictor_checkpoint(const std::filesystem::path& path,
                               const PredictorParams& params) {
  json arr = json::array();
  for (const auto& [name, t] : params.named_tensors())
    arr.push_back({{"name", name}, {"rows", t->n_rows}, {"cols", t->n_cols}, {"data", t->data}});
  json j{{"version", 1}, {"kind", "predictor"}, {"tensors", arr}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << j.dump();
}

PredictorParams load_predictor_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  json j;
  in >> j;
  if (j.at("kind").get<std::string>() != "predictor")
    throw std::runtime_error(path.string() + " is not a predictor checkpoint");
  PredictorParams p;
  auto tensors = p.named_tensors();
  const json& arr = j.at("tensors");
  if (arr.size() != tensors.size()) throw std::runtime_error("predictor checkpoint malformed");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const json& tj = arr.at(i);
    if (tj.at("name").get<std::string>() != tensors[i].first)
      throw std::runtime_error("predictor checkpoint tensor order mismatch");
    Tensor t(tj.at("rows").get<std::size_t>(), tj.at("cols").get<std::size_t>());
    t.data = tj.at("data").get<std::vector<double>>();
    if (t.data.size() != t.n_rows * t.n_cols || !t.all_finite())
      throw std::runtime_error("predictor checkpoint tensor '" + tensors[i].first +
                               "' is malformed");
    *tensors[i].second = std::move(t);
  }
  if (p.w1.n_cols * 2 != p.w1.n_rows || p.w2.n_rows != p.w1.n_cols || p.w2.n_cols != 1)
    throw std::runtime_error("predictor checkpoint shapes are inconsistent");
  return p;
}

void save_weights_csv(const std::filesystem::path& path, const HeteroGraph& g,
                      const EdgeWeightField& field) {
  if (field.weights.size() != g.edges_sa.size())
    throw std::invalid_argument("weight field does not align with graph edges");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "source_id,agent_id,weight\n";
  out.precision(17);
  for (std::size_t e = 0; e < g.edges_sa.size(); ++e)
    out << g.source_ids[g.edges_sa[e].first] << "," << g.agent_ids[g.edges_sa[e].second] << ","
        << field.weights[e] << "\n";
}

EdgeWeightField load_weights_csv(const std::filesystem::path& path, const HeteroGraph& g) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::map<std::pair<std::string, std::string>, double> by_ids;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("malformed weights row: " + line);
    by_ids[{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1)}] =
        std::stod(line.substr(c2 + 1));
  }
  EdgeWeightField field;
  for (const auto& [s, a] : g.edges_sa) {
    auto it = by_ids.find({g.source_ids[s], g.agent_ids[a]});
    if (it == by_ids.end())
      throw std::runtime_error("weights file is missing edge " + g.source_ids[s] + " -> " +
                               g.agent_ids[a]);
    field.weights.push_back(it->second);
    field.groups.push_back(s);
  }
  return field;
}

void save_weight_heatmap_pgm(const std::filesystem::path& path,
                             const std::vector<GridCell>& cells,
                             const std::vector<double>& cell_weights) {
  if (cells.empty()) return;
  if (cells.size() != cell_weights.size())
    throw std::invalid_argument("heatmap: weights do not align with cells");
  double min_x = cells[0].centroid.x, max_x = min_x;
  double min_y = cells[0].centroid.y, max_y = min_y;
  double side = cells[0].side;
  for (const auto& c : cells) {
    min_x = std::min(min_x, c.centroid.x);
    max_x = std::max(max_x, c.centroid.x);
    min_y = std::min(min_y, c.centroid.y);
    max_y = std::max(max_y, c.centroid.y);
    side = std::min(side, c.side);
  }
  auto px = [&](double v, double lo) { return static_cast<std::size_t>(std::llround((v - lo) / side)); };
  std::size_t w = px(max_x, min_x) + 1;
  std::size_t h = px(max_y, min_y) + 1;
  double wmax = *std::max_element(cell_weights.begin(), cell_weights.end());
  std::vector<unsigned char> img(w * h, 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::size_t x = px(cells[i].centroid.x, min_x);
    std::size_t y = h - 1 - px(cells[i].centroid.y, min_y);  // north up
    double v = wmax > 0 ? cell_weights[i] / wmax : 0;
    img[y * w + x] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace gridalloc
