#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gridalloc/tensor.hpp"

namespace gridalloc {

/// Define-by-run reverse-mode tape over dense tensors. Every op records
/// its adjoint as a closure; backward() walks the records in reverse and
/// accumulates gradients additively. One tape per training step; tapes
/// are not shared across threads.
class Tape {
 public:
  using NodeId = std::size_t;

  /// Registers an input tensor (parameter or constant). Gradients are
  /// accumulated for every node; callers read only the ones they need.
  NodeId leaf(Tensor t);

  // C = A * B
  NodeId matmul(NodeId a, NodeId b);
  // Elementwise; b may also be a [1 x c] row vector broadcast down rows.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  // A[n x c] scaled per row by v[n x 1].
  NodeId scale_cols(NodeId a, NodeId v);
  // A scaled by a [1 x 1] scalar node.
  NodeId scalar_scale(NodeId a, NodeId s);
  // Per-row concatenation: [n x p] || [n x q] -> [n x (p+q)].
  NodeId concat_rows(NodeId a, NodeId b);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  // [n x 1] of per-row Euclidean distances between A and B rows.
  NodeId row_l2_distance(NodeId a, NodeId b);
  NodeId gather_rows(NodeId a, std::vector<std::size_t> idx);
  NodeId scatter_rows(NodeId a, std::vector<std::size_t> idx, std::size_t n_rows);
  // Per-row per-head scaled dot product of Q and K (split into `heads`
  // column blocks), scaled by 1/sqrt(head_dim). Result [n x heads].
  NodeId head_dot(NodeId q, NodeId k, std::size_t heads);
  // V[n x d] with column block h multiplied by W[n x heads] column h.
  NodeId head_scale(NodeId v, NodeId w, std::size_t heads);
  // Column-wise softmax of -costs/tau within each row group. groups[i]
  // labels row i; rows sharing a label normalize together.
  NodeId grouped_neg_softmax(NodeId costs, std::vector<std::size_t> groups, double tau);
  // sum_{r,k} P[r,k] * ln(P[r,k] / Q'[r,k]) with Q' = (Q + eps)/(1 + K*eps)
  // per row, convention 0*ln(0/x) = 0. P is treated as a constant target;
  // gradients flow to Q only. Scalar output.
  NodeId kl_div(NodeId p, NodeId q, double eps);
  NodeId sum(NodeId a);

  /// Runs the adjoint sweep from a scalar loss node. Gradients of nodes
  /// already consumed are released as the sweep passes them; read grads
  /// of leaves only.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> backward_fn;  // empty for leaves
  };

  NodeId push(Tensor value, std::function<void(Tape&)> backward_fn);
  Tensor& grad_ref(NodeId id);
  void add_grad(NodeId id, const Tensor& g);

  std::vector<Node> nodes_;
  bool in_backward_{false};
};

}  // namespace gridalloc
