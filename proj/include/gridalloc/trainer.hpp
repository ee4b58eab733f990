#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gridalloc/dataset.hpp"
#include "gridalloc/graph.hpp"
#include "gridalloc/predictor.hpp"

namespace gridalloc {

/// Maps indicator components onto land-use classes. Indicator names are
/// "population" or "gva_<category>". Land-use classes not covered by any
/// pair fall into a residual bucket with target mass 0.
struct CategoryMapping {
  std::vector<std::pair<std::string, std::string>> pairs;  // indicator -> class
};

struct TargetSet {
  Tensor targets;               // [n_s x (pairs + 1)], rows of excluded sources are zero
  std::vector<bool> included;   // false for all-zero-indicator sources
  std::size_t buckets{0};       // pairs + residual
};

/// Normalized indicator shares per region, in mapping order, with a zero
/// residual component appended. Regions whose mapped indicators are all
/// zero are excluded (zero target row).
TargetSet build_targets(const std::vector<Region>& regions, const CategoryMapping& mapping,
                        const std::vector<std::string>& gva_categories);

/// [n_a x buckets] one-hot of each cell's dominant class regrouped through
/// the mapping; unmapped classes hit the residual column.
Tensor bucket_matrix(const std::vector<GridCell>& cells, const CategoryMapping& mapping,
                     const std::vector<std::string>& class_set);

/// P_hat[s] = sum_a w_sa * T_a over the bucketed one-hots.
Tensor reconstruct(const EdgeWeightField& field,
                   const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                   const Tensor& buckets, std::size_t n_sources);

/// Summed KL divergence with epsilon smoothing of the reconstruction.
double kl_loss(const Tensor& targets, const Tensor& reconstruction, double epsilon_smooth);

struct TrainConfig {
  std::size_t epochs{500};
  double learning_rate{1e-3};
  enum class Optimizer { GradientDescent, Adam } optimizer{Optimizer::Adam};
  std::uint64_t seed{0};
  double tau{0.5};
  std::size_t dim{64};
  std::size_t heads{4};
  std::size_t layers{2};
  double epsilon_smooth{1e-8};
  std::size_t patience{0};  // 0 disables early stopping
};

struct TrainResult {
  EncoderParams encoder;
  PredictorParams predictor;
  std::vector<double> loss_trace;  // one entry per epoch
  double best_loss{0};
};

/// Full-batch optimization of the summed KL objective over all sources.
/// Deterministic for a fixed seed; throws (with the epoch index) if the
/// loss goes non-finite.
TrainResult train(const HeteroGraph& g, const std::vector<GridCell>& cells,
                  const std::vector<Region>& regions,
                  const std::vector<std::string>& class_set,
                  const std::vector<std::string>& gva_categories,
                  const CategoryMapping& mapping, const TrainConfig& config);

/// Forward loss for given parameters; shared by training and the
/// finite-difference checks.
double model_loss(const HeteroGraph& g, const Tensor& buckets, const TargetSet& targets,
                  const EncoderParams& encoder, const PredictorParams& predictor,
                  double tau, double epsilon_smooth);

/// Loss plus analytic gradients, ordered as encoder.named_tensors()
/// followed by predictor.named_tensors().
std::pair<double, std::vector<Tensor>> model_loss_and_grads(
    const HeteroGraph& g, const Tensor& buckets, const TargetSet& targets,
    const EncoderParams& encoder, const PredictorParams& predictor, double tau,
    double epsilon_smooth);

void save_loss_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace);

CategoryMapping default_mapping(const std::vector<std::string>& gva_categories,
                                const std::vector<std::string>& class_set);

}  // namespace gridalloc
