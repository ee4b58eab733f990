#include "gridalloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "gridalloc/rng.hpp"

namespace gridalloc {

namespace {

double indicator_value(const Region& r, const std::string& name,
                       const std::vector<std::string>& gva_categories) {
  if (name == "population") return r.population;
  if (name.rfind("gva_", 0) == 0) {
    std::string cat = name.substr(4);
    auto it = std::find(gva_categories.begin(), gva_categories.end(), cat);
    if (it == gva_categories.end())
      throw std::invalid_argument("mapping references unknown indicator '" + name + "'");
    return r.gva[static_cast<std::size_t>(it - gva_categories.begin())];
  }
  throw std::invalid_argument("unrecognized indicator name '" + name + "'");
}

}  // namespace

TargetSet build_targets(const std::vector<Region>& regions, const CategoryMapping& mapping,
                        const std::vector<std::string>& gva_categories) {
  if (mapping.pairs.empty()) throw std::invalid_argument("category mapping is empty");
  TargetSet out;
  out.buckets = mapping.pairs.size() + 1;
  out.targets = Tensor(regions.size(), out.buckets);
  out.included.assign(regions.size(), false);
  for (std::size_t s = 0; s < regions.size(); ++s) {
    double total = 0;
    std::vector<double> vals;
    for (const auto& [indicator, cls] : mapping.pairs) {
      double v = indicator_value(regions[s], indicator, gva_categories);
      vals.push_back(v);
      total += v;
    }
    if (total <= 0) continue;  // excluded from the loss
    out.included[s] = true;
    for (std::size_t k = 0; k < vals.size(); ++k) out.targets.at(s, k) = vals[k] / total;
    // residual bucket keeps target mass 0
  }
  return out;
}

Tensor bucket_matrix(const std::vector<GridCell>& cells, const CategoryMapping& mapping,
                     const std::vector<std::string>& class_set) {
  std::size_t buckets = mapping.pairs.size() + 1;
  std::vector<std::size_t> class_to_bucket(class_set.size(), buckets - 1);
  for (std::size_t k = 0; k < mapping.pairs.size(); ++k) {
    auto it = std::find(class_set.begin(), class_set.end(), mapping.pairs[k].second);
    if (it == class_set.end())
      throw std::invalid_argument("mapping references unknown land-use class '" +
                                  mapping.pairs[k].second + "'");
    std::size_t ci = static_cast<std::size_t>(it - class_set.begin());
    if (class_to_bucket[ci] != buckets - 1)
      throw std::invalid_argument("mapping assigns class '" + mapping.pairs[k].second +
                                  "' twice");
    class_to_bucket[ci] = k;
  }
  Tensor t(cells.size(), buckets);
  for (std::size_t a = 0; a < cells.size(); ++a)
    t.at(a, class_to_bucket[cells[a].dominant_class]) = 1.0;
  return t;
}

Tensor reconstruct(const EdgeWeightField& field,
                   const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                   const Tensor& buckets, std::size_t n_sources) {
  if (field.weights.size() != edges.size())
    throw std::invalid_argument("weight field does not align with edges");
  Tensor p_hat(n_sources, buckets.n_cols);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& [s, a] = edges[e];
    for (std::size_t k = 0; k < buckets.n_cols; ++k)
      p_hat.at(s, k) += field.weights[e] * buckets.at(a, k);
  }
  return p_hat;
}

double kl_loss(const Tensor& targets, const Tensor& reconstruction, double epsilon_smooth) {
  Tape tape;
  Tape::NodeId loss = tape.kl_div(tape.leaf(targets), tape.leaf(reconstruction), epsilon_smooth);
  return tape.value(loss).data[0];
}

namespace {

// Zero out target rows of sources with no edges; their reconstruction is
// identically zero and they carry no training signal.
Tensor effective_targets(const HeteroGraph& g, const TargetSet& targets) {
  Tensor t = targets.targets;
  std::vector<bool> has_edge(g.n_sources(), false);
  for (const auto& [s, a] : g.edges_sa) has_edge[s] = true;
  for (std::size_t s = 0; s < g.n_sources(); ++s)
    if (!has_edge[s])
      for (std::size_t k = 0; k < t.n_cols; ++k) t.at(s, k) = 0.0;
  return t;
}

struct LossNodes {
  Tape::NodeId loss{};
  TapeEncoderParams enc;
  TapePredictorParams pred;
};

LossNodes loss_on_tape(Tape& tape, const HeteroGraph& g, const Tensor& buckets,
                       const Tensor& targets, const EncoderParams& encoder,
                       const PredictorParams& predictor, double tau, double eps) {
  LossNodes out;
  out.enc = put_encoder_on_tape(tape, encoder);
  out.pred = put_predictor_on_tape(tape, predictor);
  PredictNodes predict = predict_weights_on_tape(tape, g, out.enc, out.pred, tau);

  std::vector<std::size_t> edge_src(g.edges_sa.size()), edge_agent(g.edges_sa.size());
  for (std::size_t e = 0; e < g.edges_sa.size(); ++e) {
    edge_src[e] = g.edges_sa[e].first;
    edge_agent[e] = g.edges_sa[e].second;
  }
  Tape::NodeId t_edges = tape.gather_rows(tape.leaf(buckets), edge_agent);
  Tape::NodeId contrib = tape.scale_cols(t_edges, predict.weights);
  Tape::NodeId p_hat = tape.scatter_rows(contrib, edge_src, g.n_sources());
  out.loss = tape.kl_div(tape.leaf(targets), p_hat, eps);
  return out;
}

}  // namespace

double model_loss(const HeteroGraph& g, const Tensor& buckets, const TargetSet& targets,
                  const EncoderParams& encoder, const PredictorParams& predictor, double tau,
                  double epsilon_smooth) {
  Tape tape;
  Tensor t = effective_targets(g, targets);
  LossNodes nodes = loss_on_tape(tape, g, buckets, t, encoder, predictor, tau, epsilon_smooth);
  return tape.value(nodes.loss).data[0];
}

std::pair<double, std::vector<Tensor>> model_loss_and_grads(
    const HeteroGraph& g, const Tensor& buckets, const TargetSet& targets,
    const EncoderParams& encoder, const PredictorParams& predictor, double tau,
    double epsilon_smooth) {
  Tape tape;
  Tensor t = effective_targets(g, targets);
  LossNodes nodes = loss_on_tape(tape, g, buckets, t, encoder, predictor, tau, epsilon_smooth);
  tape.backward(nodes.loss);
  std::vector<Tape::NodeId> ids = nodes.enc.all;
  ids.insert(ids.end(), nodes.pred.all.begin(), nodes.pred.all.end());
  std::vector<Tensor> grads;
  for (Tape::NodeId id : ids) {
    Tensor gr = tape.grad(id);
    if (gr.data.empty())  // leaf not on any path to the loss
      gr = Tensor::zeros(tape.value(id).n_rows, tape.value(id).n_cols);
    grads.push_back(std::move(gr));
  }
  return {tape.value(nodes.loss).data[0], std::move(grads)};
}

namespace {

struct AdamState {
  std::vector<Tensor> m, v;
  std::size_t t{0};
};

void apply_update(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                  const TrainConfig& cfg, AdamState& adam) {
  if (cfg.optimizer == TrainConfig::Optimizer::GradientDescent) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i]->data.size(); ++j)
        params[i]->data[j] -= cfg.learning_rate * grads[i].data[j];
    return;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  if (adam.m.empty()) {
    for (Tensor* p : params) {
      adam.m.push_back(Tensor::zeros(p->n_rows, p->n_cols));
      adam.v.push_back(Tensor::zeros(p->n_rows, p->n_cols));
    }
  }
  adam.t++;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.t));
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i]->data.size(); ++j) {
      double gr = grads[i].data[j];
      adam.m[i].data[j] = beta1 * adam.m[i].data[j] + (1 - beta1) * gr;
      adam.v[i].data[j] = beta2 * adam.v[i].data[j] + (1 - beta2) * gr * gr;
      double mhat = adam.m[i].data[j] / bc1;
      double vhat = adam.v[i].data[j] / bc2;
      params[i]->data[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
    }
}

}  // namespace

TrainResult train(const HeteroGraph& g, const std::vector<GridCell>& cells,
                  const std::vector<Region>& regions,
                  const std::vector<std::string>& class_set,
                  const std::vector<std::string>& gva_categories,
                  const CategoryMapping& mapping, const TrainConfig& config) {
  if (mapping.pairs.empty())
    throw std::invalid_argument("train: category mapping must not be empty");

  TrainResult result;
  result.encoder =
      init_encoder_params(g.source_features.n_cols, g.agent_features.n_cols, config.dim,
                          config.heads, config.layers, seed_for(config.seed, "encoder-init"));
  result.predictor = init_predictor_params(config.dim, seed_for(config.seed, "predictor-init"));

  TargetSet targets = build_targets(regions, mapping, gva_categories);
  Tensor buckets = bucket_matrix(cells, mapping, class_set);

  std::vector<Tensor*> params;
  for (auto& [name, t] : result.encoder.named_tensors()) params.push_back(t);
  for (auto& [name, t] : result.predictor.named_tensors()) params.push_back(t);

  AdamState adam;
  double best = std::numeric_limits<double>::infinity();
  EncoderParams best_encoder = result.encoder;
  PredictorParams best_predictor = result.predictor;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_value;
    std::vector<Tensor> grads;
    try {
      auto [lv, gs] = model_loss_and_grads(g, buckets, targets, result.encoder,
                                           result.predictor, config.tau,
                                           config.epsilon_smooth);
      loss_value = lv;
      grads = std::move(gs);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " +
                               e.what());
    }
    result.loss_trace.push_back(loss_value);
    if (loss_value < best) {
      best = loss_value;
      best_encoder = result.encoder;
      best_predictor = result.predictor;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
    apply_update(params, grads, config, adam);
  }

  if (!result.loss_trace.empty()) {
    result.encoder = std::move(best_encoder);
    result.predictor = std::move(best_predictor);
  }
  result.best_loss = result.loss_trace.empty() ? 0.0 : best;
  return result;
}

void save_loss_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "epoch,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << "," << trace[i] << "\n";
}

CategoryMapping default_mapping(const std::vector<std::string>& gva_categories,
                                const std::vector<std::string>& class_set) {
  auto has_class = [&](const std::string& c) {
    return std::find(class_set.begin(), class_set.end(), c) != class_set.end();
  };
  CategoryMapping m;
  for (const std::string& cat : gva_categories) {
    std::string cls;
    if (has_class(cat))
      cls = cat;
    else if (cat == "industry" && has_class("industrial"))
      cls = "industrial";
    else if (cat == "commerce" && has_class("commercial"))
      cls = "commercial";
    else if (cat == "agriculture" && has_class("agricultural"))
      cls = "agricultural";
    if (!cls.empty()) m.pairs.emplace_back("gva_" + cat, cls);
  }
  if (has_class("residential")) m.pairs.emplace_back("population", "residential");
  if (m.pairs.empty())
    throw std::runtime_error("no indicator could be mapped onto a land-use class");
  return m;
}

}  // namespace gridalloc
