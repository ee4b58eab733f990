#include "gridalloc/encoder.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "gridalloc/rng.hpp"

namespace gridalloc {

namespace {

Tensor init_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t(rows, cols);
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  fill_uniform(t, -bound, bound, rng);
  return t;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> EncoderParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("proj_source", &proj_source);
  out.emplace_back("proj_agent", &proj_agent);
  for (std::size_t l = 0; l < layer_params.size(); ++l) {
    EncoderLayerParams& lp = layer_params[l];
    std::string prefix = "layer" + std::to_string(l) + ".";
    out.emplace_back(prefix + "sa.wq", &lp.sa.wq);
    out.emplace_back(prefix + "sa.wk", &lp.sa.wk);
    out.emplace_back(prefix + "sa.wv", &lp.sa.wv);
    out.emplace_back(prefix + "sa.wo", &lp.sa.wo);
    out.emplace_back(prefix + "as.wq", &lp.as.wq);
    out.emplace_back(prefix + "as.wk", &lp.as.wk);
    out.emplace_back(prefix + "as.wv", &lp.as.wv);
    out.emplace_back(prefix + "as.wo", &lp.as.wo);
    out.emplace_back(prefix + "ff_source", &lp.ff_source);
    out.emplace_back(prefix + "ff_agent", &lp.ff_agent);
    out.emplace_back(prefix + "rs_source", &lp.res_scale_source);
    out.emplace_back(prefix + "rs_agent", &lp.res_scale_agent);
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> EncoderParams::named_tensors() const {
  auto mutable_view = const_cast<EncoderParams*>(this)->named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mutable_view.size());
  for (auto& [name, t] : mutable_view) out.emplace_back(name, t);
  return out;
}

EncoderParams init_encoder_params(std::size_t d_source, std::size_t d_agent, std::size_t d,
                                  std::size_t heads, std::size_t layers, std::uint64_t seed) {
  if (heads == 0 || d % heads != 0)
    throw std::invalid_argument("latent dim " + std::to_string(d) +
                                " not divisible by heads " + std::to_string(heads));
  if (layers < 1) throw std::invalid_argument("encoder needs at least one layer");
  std::mt19937_64 rng(seed);
  EncoderParams p;
  p.dim = d;
  p.heads = heads;
  p.proj_source = init_matrix(d_source, d, rng);
  p.proj_agent = init_matrix(d_agent, d, rng);
  for (std::size_t l = 0; l < layers; ++l) {
    EncoderLayerParams lp;
    for (RelationAttnParams* rel : {&lp.sa, &lp.as}) {
      rel->wq = init_matrix(d, d, rng);
      rel->wk = init_matrix(d, d, rng);
      rel->wv = init_matrix(d, d, rng);
      rel->wo = init_matrix(d, d, rng);
    }
    lp.ff_source = init_matrix(d, d, rng);
    lp.ff_agent = init_matrix(d, d, rng);
    lp.res_scale_source = Tensor::scalar(1.0);
    lp.res_scale_agent = Tensor::scalar(1.0);
    p.layer_params.push_back(std::move(lp));
  }
  return p;
}

TapeEncoderParams put_encoder_on_tape(Tape& tape, const EncoderParams& params) {
  TapeEncoderParams tp;
  tp.heads = params.heads;
  auto put = [&](const Tensor& t) {
    Tape::NodeId id = tape.leaf(t);
    tp.all.push_back(id);
    return id;
  };
  tp.proj_source = put(params.proj_source);
  tp.proj_agent = put(params.proj_agent);
  for (const EncoderLayerParams& lp : params.layer_params) {
    TapeEncoderParams::Layer layer;
    layer.sa = {put(lp.sa.wq), put(lp.sa.wk), put(lp.sa.wv), put(lp.sa.wo)};
    layer.as = {put(lp.as.wq), put(lp.as.wk), put(lp.as.wv), put(lp.as.wo)};
    layer.ff_source = put(lp.ff_source);
    layer.ff_agent = put(lp.ff_agent);
    layer.rs_source = put(lp.res_scale_source);
    layer.rs_agent = put(lp.res_scale_agent);
    tp.layers.push_back(layer);
  }
  return tp;
}

namespace {

// One relation: targets attend over their typed neighbors with scaled
// dot-product attention, multi-head concat, output projection.
Tape::NodeId attend(Tape& tape, Tape::NodeId h_neighbors, Tape::NodeId h_targets,
                    const std::vector<std::size_t>& nbr_idx,
                    const std::vector<std::size_t>& tgt_idx, std::size_t n_targets,
                    const TapeEncoderParams::Rel& rel, std::size_t heads,
                    std::vector<Tape::NodeId>* attention_out) {
  std::size_t d = tape.value(h_targets).n_cols;
  if (nbr_idx.empty()) return tape.leaf(Tensor::zeros(n_targets, d));
  Tape::NodeId q = tape.matmul(h_targets, rel.wq);
  Tape::NodeId k = tape.matmul(h_neighbors, rel.wk);
  Tape::NodeId v = tape.matmul(h_neighbors, rel.wv);
  Tape::NodeId qe = tape.gather_rows(q, tgt_idx);
  Tape::NodeId ke = tape.gather_rows(k, nbr_idx);
  Tape::NodeId ve = tape.gather_rows(v, nbr_idx);
  Tape::NodeId scores = tape.head_dot(qe, ke, heads);
  // softmax(x) == softmax(-(-x)/1) per target group
  Tape::NodeId neg = tape.sub(tape.leaf(Tensor::zeros(nbr_idx.size(), heads)), scores);
  Tape::NodeId attn = tape.grouped_neg_softmax(neg, tgt_idx, 1.0);
  if (attention_out) attention_out->push_back(attn);
  Tape::NodeId weighted = tape.head_scale(ve, attn, heads);
  Tape::NodeId gathered = tape.scatter_rows(weighted, tgt_idx, n_targets);
  return tape.matmul(gathered, rel.wo);
}

}  // namespace

EncodeNodes encode_on_tape(Tape& tape, const HeteroGraph& g, const TapeEncoderParams& p) {
  if (p.layers.empty()) throw std::invalid_argument("encoder params have no layers");

  std::vector<std::size_t> edge_src(g.edges_sa.size()), edge_agent(g.edges_sa.size());
  for (std::size_t e = 0; e < g.edges_sa.size(); ++e) {
    edge_src[e] = g.edges_sa[e].first;
    edge_agent[e] = g.edges_sa[e].second;
  }

  EncodeNodes out;
  Tape::NodeId src_feat = tape.leaf(g.source_features);
  Tape::NodeId agent_feat = tape.leaf(g.agent_features);
  Tape::NodeId hs = tape.matmul(src_feat, p.proj_source);
  Tape::NodeId ha = tape.matmul(agent_feat, p.proj_agent);

  for (const TapeEncoderParams::Layer& layer : p.layers) {
    // both relations read the previous layer's activations
    Tape::NodeId msg_a = attend(tape, hs, ha, edge_src, edge_agent, g.n_agents(), layer.sa,
                                p.heads, &out.attention);
    Tape::NodeId msg_s = attend(tape, ha, hs, edge_agent, edge_src, g.n_sources(), layer.as,
                                p.heads, &out.attention);
    Tape::NodeId ha_mid = tape.add(ha, tape.scalar_scale(msg_a, layer.rs_agent));
    Tape::NodeId hs_mid = tape.add(hs, tape.scalar_scale(msg_s, layer.rs_source));
    ha = tape.add(ha_mid, tape.relu(tape.matmul(ha_mid, layer.ff_agent)));
    hs = tape.add(hs_mid, tape.relu(tape.matmul(hs_mid, layer.ff_source)));
  }
  out.h_source = hs;
  out.h_agent = ha;
  return out;
}

std::pair<Tensor, Tensor> encode(const HeteroGraph& g, const EncoderParams& params) {
  if (g.source_features.n_cols != params.proj_source.n_rows ||
      g.agent_features.n_cols != params.proj_agent.n_rows)
    throw std::invalid_argument("feature dims do not match encoder projections");
  Tape tape;
  TapeEncoderParams tp = put_encoder_on_tape(tape, params);
  EncodeNodes nodes = encode_on_tape(tape, g, tp);
  return {tape.value(nodes.h_source), tape.value(nodes.h_agent)};
}

namespace {

using nlohmann::json;

json tensors_to_json(const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  json arr = json::array();
  for (const auto& [name, t] : tensors)
    arr.push_back({{"name", name}, {"rows", t->n_rows}, {"cols", t->n_cols}, {"data", t->data}});
  return arr;
}

void tensors_from_json(const json& arr,
                       const std::vector<std::pair<std::string, Tensor*>>& tensors) {
  if (arr.size() != tensors.size())
    throw std::runtime_error("checkpoint tensor count mismatch: file has " +
                             std::to_string(arr.size()) + ", expected " +
                             std::to_string(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const json& tj = arr.at(i);
    auto& [name, t] = tensors[i];
    if (tj.at("name").get<std::string>() != name)
      throw std::runtime_error("checkpoint tensor '" + tj.at("name").get<std::string>() +
                               "' does not match expected '" + name + "'");
    Tensor loaded(tj.at("rows").get<std::size_t>(), tj.at("cols").get<std::size_t>());
    loaded.data = tj.at("data").get<std::vector<double>>();
    if (loaded.data.size() != loaded.n_rows * loaded.n_cols || !loaded.all_finite())
      throw std::runtime_error("checkpoint tensor '" + name + "' is malformed");
    *t = std::move(loaded);
  }
}

}  // namespace

void save_encoder_checkpoint(const std::filesystem::path& path, const EncoderParams& params) {
  json j;
  j["version"] = 1;
  j["kind"] = "encoder";
  j["dim"] = params.dim;
  j["heads"] = params.heads;
  j["layers"] = params.layers();
  j["tensors"] = tensors_to_json(params.named_tensors());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << j.dump();
}

EncoderParams load_encoder_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  json j;
  in >> j;
  if (j.at("kind").get<std::string>() != "encoder")
    throw std::runtime_error(path.string() + " is not an encoder checkpoint");
  EncoderParams p;
  p.dim = j.at("dim").get<std::size_t>();
  p.heads = j.at("heads").get<std::size_t>();
  std::size_t layers = j.at("layers").get<std::size_t>();
  if (p.heads == 0 || p.dim % p.heads != 0)
    throw std::runtime_error("checkpoint dim/heads combination is invalid");
  p.layer_params.resize(layers);
  // shapes are validated against the manifest entries below
  const json& arr = j.at("tensors");
  // placeholder shapes so named_tensors() enumerates; real shapes come from the file
  tensors_from_json(arr, p.named_tensors());
  for (const EncoderLayerParams& lp : p.layer_params)
    if (lp.sa.wq.n_rows != p.dim || lp.sa.wq.n_cols != p.dim)
      throw std::runtime_error("checkpoint layer shapes do not match dim " +
                               std::to_string(p.dim));
  if (p.proj_source.n_cols != p.dim || p.proj_agent.n_cols != p.dim)
    throw std::runtime_error("checkpoint projection shapes do not match dim " +
                             std::to_string(p.dim));
  return p;
}

}  // namespace gridalloc
