#include "gridalloc/tape.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace gridalloc {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

CMap as_eigen(const Tensor& t) {
  return CMap(t.data.data(), static_cast<Eigen::Index>(t.n_rows),
              static_cast<Eigen::Index>(t.n_cols));
}

MMap as_eigen(Tensor& t) {
  return MMap(t.data.data(), static_cast<Eigen::Index>(t.n_rows),
              static_cast<Eigen::Index>(t.n_cols));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

void check_finite(const char* op, const Tensor& t) {
  if (!t.all_finite())
    throw std::runtime_error(std::string(op) + ": non-finite output " + t.shape_str());
}

}  // namespace

Tape::NodeId Tape::push(Tensor value, std::function<void(Tape&)> backward_fn) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backward_fn)});
  return nodes_.size() - 1;
}

Tensor& Tape::grad_ref(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.n_rows, n.value.n_cols);
  return n.grad;
}

void Tape::add_grad(NodeId id, const Tensor& g) {
  Tensor& acc = grad_ref(id);
  for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
}

Tape::NodeId Tape::leaf(Tensor t) {
  check_finite("leaf", t);
  return push(std::move(t), nullptr);
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.n_cols != B.n_rows) shape_error("matmul", A, B);
  Tensor C(A.n_rows, B.n_cols);
  as_eigen(C) = as_eigen(A) * as_eigen(B);
  check_finite("matmul", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, b, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& A2 = tp.value(a);
    const Tensor& B2 = tp.value(b);
    as_eigen(tp.grad_ref(a)) += as_eigen(dC) * as_eigen(B2).transpose();
    as_eigen(tp.grad_ref(b)) += as_eigen(A2).transpose() * as_eigen(dC);
  };
  return out;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  bool row_bcast = (B.n_rows == 1 && B.n_cols == A.n_cols && A.n_rows != 1);
  if (!A.same_shape(B) && !row_bcast) shape_error("add", A, B);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t r = 0; r < A.n_rows; ++r)
    for (std::size_t c = 0; c < A.n_cols; ++c)
      C.at(r, c) = A.at(r, c) + (row_bcast ? B.at(0, c) : B.at(r, c));
  check_finite("add", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, b, out, row_bcast](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    tp.add_grad(a, dC);
    Tensor& db = tp.grad_ref(b);
    if (row_bcast) {
      for (std::size_t r = 0; r < dC.n_rows; ++r)
        for (std::size_t c = 0; c < dC.n_cols; ++c) db.at(0, c) += dC.at(r, c);
    } else {
      tp.add_grad(b, dC);
    }
  };
  return out;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t i = 0; i < A.data.size(); ++i) C.data[i] = A.data[i] - B.data[i];
  check_finite("sub", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, b, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    tp.add_grad(a, dC);
    Tensor& db = tp.grad_ref(b);
    for (std::size_t i = 0; i < dC.data.size(); ++i) db.data[i] -= dC.data[i];
  };
  return out;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t i = 0; i < A.data.size(); ++i) C.data[i] = A.data[i] * B.data[i];
  check_finite("mul", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, b, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& A2 = tp.value(a);
    const Tensor& B2 = tp.value(b);
    Tensor& da = tp.grad_ref(a);
    Tensor& db = tp.grad_ref(b);
    for (std::size_t i = 0; i < dC.data.size(); ++i) {
      da.data[i] += dC.data[i] * B2.data[i];
      db.data[i] += dC.data[i] * A2.data[i];
    }
  };
  return out;
}

Tape::NodeId Tape::scale_cols(NodeId a, NodeId v) {
  const Tensor& A = value(a);
  const Tensor& V = value(v);
  if (V.n_rows != A.n_rows || V.n_cols != 1) shape_error("scale_cols", A, V);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t r = 0; r < A.n_rows; ++r)
    for (std::size_t c = 0; c < A.n_cols; ++c) C.at(r, c) = A.at(r, c) * V.at(r, 0);
  check_finite("scale_cols", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, v, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& A2 = tp.value(a);
    const Tensor& V2 = tp.value(v);
    Tensor& da = tp.grad_ref(a);
    Tensor& dv = tp.grad_ref(v);
    for (std::size_t r = 0; r < dC.n_rows; ++r)
      for (std::size_t c = 0; c < dC.n_cols; ++c) {
        da.at(r, c) += dC.at(r, c) * V2.at(r, 0);
        dv.at(r, 0) += dC.at(r, c) * A2.at(r, c);
      }
  };
  return out;
}

Tape::NodeId Tape::scalar_scale(NodeId a, NodeId s) {
  const Tensor& A = value(a);
  const Tensor& S = value(s);
  if (!S.is_scalar()) shape_error("scalar_scale", A, S);
  Tensor C(A.n_rows, A.n_cols);
  double sv = S.data[0];
  for (std::size_t i = 0; i < A.data.size(); ++i) C.data[i] = A.data[i] * sv;
  check_finite("scalar_scale", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, s, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& A2 = tp.value(a);
    double sv2 = tp.value(s).data[0];
    Tensor& da = tp.grad_ref(a);
    Tensor& ds = tp.grad_ref(s);
    for (std::size_t i = 0; i < dC.data.size(); ++i) {
      da.data[i] += dC.data[i] * sv2;
      ds.data[0] += dC.data[i] * A2.data[i];
    }
  };
  return out;
}

Tape::NodeId Tape::concat_rows(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.n_rows != B.n_rows) shape_error("concat_rows", A, B);
  Tensor C(A.n_rows, A.n_cols + B.n_cols);
  for (std::size_t r = 0; r < A.n_rows; ++r) {
    for (std::size_t c = 0; c < A.n_cols; ++c) C.at(r, c) = A.at(r, c);
    for (std::size_t c = 0; c < B.n_cols; ++c) C.at(r, A.n_cols + c) = B.at(r, c);
  }
  std::size_t ca = A.n_cols;
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, b, out, ca](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    Tensor& da = tp.grad_ref(a);
    Tensor& db = tp.grad_ref(b);
    for (std::size_t r = 0; r < dC.n_rows; ++r) {
      for (std::size_t c = 0; c < ca; ++c) da.at(r, c) += dC.at(r, c);
      for (std::size_t c = 0; c < db.n_cols; ++c) db.at(r, c) += dC.at(r, ca + c);
    }
  };
  return out;
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  const Tensor& A = value(a);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t i = 0; i < A.data.size(); ++i) {
    double x = A.data[i];
    // split form avoids overflow on large |x|
    C.data[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  check_finite("sigmoid", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& Y = tp.value(out);
    Tensor& da = tp.grad_ref(a);
    for (std::size_t i = 0; i < dC.data.size(); ++i)
      da.data[i] += dC.data[i] * Y.data[i] * (1.0 - Y.data[i]);
  };
  return out;
}

Tape::NodeId Tape::relu(NodeId a) {
  const Tensor& A = value(a);
  Tensor C(A.n_rows, A.n_cols);
  for (std::size_t i = 0; i < A.data.size(); ++i) C.data[i] = A.data[i] > 0 ? A.data[i] : 0.0;
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, out](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& X = tp.value(a);
    Tensor& da = tp.grad_ref(a);
    for (std::size_t i = 0; i < dC.data.size(); ++i)
      if (X.data[i] > 0) da.data[i] += dC.data[i];
  };
  return out;
}

Tape::NodeId Tape::row_l2_distance(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error("row_l2_distance", A, B);
  Tensor D(A.n_rows, 1);
  for (std::size_t r = 0; r < A.n_rows; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < A.n_cols; ++c) {
      double diff = A.at(r, c) - B.at(r, c);
      s += diff * diff;
    }
    D.at(r, 0) = std::sqrt(s);
  }
  check_finite("row_l2_distance", D);
  NodeId out = push(std::move(D), nullptr);
  nodes_[out].backward_fn = [a, b, out](Tape& tp) {
    const Tensor& dD = tp.nodes_[out].grad;
    const Tensor& D2 = tp.value(out);
    const Tensor& A2 = tp.value(a);
    const Tensor& B2 = tp.value(b);
    Tensor& da = tp.grad_ref(a);
    Tensor& db = tp.grad_ref(b);
    for (std::size_t r = 0; r < A2.n_rows; ++r) {
      double d = D2.at(r, 0);
      if (d == 0.0) continue;  // subgradient 0 at coincident rows
      double g = dD.at(r, 0) / d;
      for (std::size_t c = 0; c < A2.n_cols; ++c) {
        double diff = A2.at(r, c) - B2.at(r, c);
        da.at(r, c) += g * diff;
        db.at(r, c) -= g * diff;
      }
    }
  };
  return out;
}

Tape::NodeId Tape::gather_rows(NodeId a, std::vector<std::size_t> idx) {
  const Tensor& A = value(a);
  Tensor C(idx.size(), A.n_cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= A.n_rows) throw std::out_of_range("gather_rows: index out of range");
    for (std::size_t c = 0; c < A.n_cols; ++c) C.at(r, c) = A.at(idx[r], c);
  }
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, out, idx = std::move(idx)](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    Tensor& da = tp.grad_ref(a);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < dC.n_cols; ++c) da.at(idx[r], c) += dC.at(r, c);
  };
  return out;
}

Tape::NodeId Tape::scatter_rows(NodeId a, std::vector<std::size_t> idx, std::size_t n_rows) {
  const Tensor& A = value(a);
  if (idx.size() != A.n_rows) throw std::invalid_argument("scatter_rows: index count != rows");
  Tensor C(n_rows, A.n_cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n_rows) throw std::out_of_range("scatter_rows: index out of range");
    for (std::size_t c = 0; c < A.n_cols; ++c) C.at(idx[r], c) += A.at(r, c);
  }
  check_finite("scatter_rows", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [a, out, idx = std::move(idx)](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    Tensor& da = tp.grad_ref(a);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < dC.n_cols; ++c) da.at(r, c) += dC.at(idx[r], c);
  };
  return out;
}

Tape::NodeId Tape::head_dot(NodeId q, NodeId k, std::size_t heads) {
  const Tensor& Q = value(q);
  const Tensor& K = value(k);
  if (!Q.same_shape(K)) shape_error("head_dot", Q, K);
  if (heads == 0 || Q.n_cols % heads != 0)
    throw std::invalid_argument("head_dot: columns not divisible by heads");
  std::size_t hd = Q.n_cols / heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Tensor S(Q.n_rows, heads);
  for (std::size_t r = 0; r < Q.n_rows; ++r)
    for (std::size_t h = 0; h < heads; ++h) {
      double s = 0;
      for (std::size_t j = h * hd; j < (h + 1) * hd; ++j) s += Q.at(r, j) * K.at(r, j);
      S.at(r, h) = s * scale;
    }
  check_finite("head_dot", S);
  NodeId out = push(std::move(S), nullptr);
  nodes_[out].backward_fn = [q, k, out, heads, hd, scale](Tape& tp) {
    const Tensor& dS = tp.nodes_[out].grad;
    const Tensor& Q2 = tp.value(q);
    const Tensor& K2 = tp.value(k);
    Tensor& dq = tp.grad_ref(q);
    Tensor& dk = tp.grad_ref(k);
    for (std::size_t r = 0; r < Q2.n_rows; ++r)
      for (std::size_t h = 0; h < heads; ++h) {
        double g = dS.at(r, h) * scale;
        for (std::size_t j = h * hd; j < (h + 1) * hd; ++j) {
          dq.at(r, j) += g * K2.at(r, j);
          dk.at(r, j) += g * Q2.at(r, j);
        }
      }
  };
  return out;
}

Tape::NodeId Tape::head_scale(NodeId v, NodeId w, std::size_t heads) {
  const Tensor& V = value(v);
  const Tensor& W = value(w);
  if (W.n_rows != V.n_rows || W.n_cols != heads) shape_error("head_scale", V, W);
  if (heads == 0 || V.n_cols % heads != 0)
    throw std::invalid_argument("head_scale: columns not divisible by heads");
  std::size_t hd = V.n_cols / heads;
  Tensor C(V.n_rows, V.n_cols);
  for (std::size_t r = 0; r < V.n_rows; ++r)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t j = h * hd; j < (h + 1) * hd; ++j)
        C.at(r, j) = V.at(r, j) * W.at(r, h);
  check_finite("head_scale", C);
  NodeId out = push(std::move(C), nullptr);
  nodes_[out].backward_fn = [v, w, out, heads, hd](Tape& tp) {
    const Tensor& dC = tp.nodes_[out].grad;
    const Tensor& V2 = tp.value(v);
    const Tensor& W2 = tp.value(w);
    Tensor& dv = tp.grad_ref(v);
    Tensor& dw = tp.grad_ref(w);
    for (std::size_t r = 0; r < V2.n_rows; ++r)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t j = h * hd; j < (h + 1) * hd; ++j) {
          dv.at(r, j) += dC.at(r, j) * W2.at(r, h);
          dw.at(r, h) += dC.at(r, j) * V2.at(r, j);
        }
  };
  return out;
}

Tape::NodeId Tape::grouped_neg_softmax(NodeId costs, std::vector<std::size_t> groups,
                                       double tau) {
  const Tensor& C = value(costs);
  if (tau <= 0) throw std::invalid_argument("grouped_neg_softmax: tau must be positive");
  if (groups.size() != C.n_rows)
    throw std::invalid_argument("grouped_neg_softmax: group labels != rows");
  std::unordered_map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < groups.size(); ++r) members[groups[r]].push_back(r);
  std::vector<std::vector<std::size_t>> group_rows;
  group_rows.reserve(members.size());
  for (auto& [label, rows] : members) group_rows.push_back(std::move(rows));

  Tensor W(C.n_rows, C.n_cols);
  for (const auto& rows : group_rows)
    for (std::size_t c = 0; c < C.n_cols; ++c) {
      // max-subtraction guard: costs are unbounded
      double m = -C.at(rows[0], c);
      for (std::size_t r : rows) m = std::max(m, -C.at(r, c));
      double z = 0;
      for (std::size_t r : rows) {
        double e = std::exp((-C.at(r, c) - m) / tau);
        W.at(r, c) = e;
        z += e;
      }
      for (std::size_t r : rows) W.at(r, c) /= z;
    }
  check_finite("grouped_neg_softmax", W);
  NodeId out = push(std::move(W), nullptr);
  nodes_[out].backward_fn = [costs, out, tau, group_rows = std::move(group_rows)](Tape& tp) {
    const Tensor& dW = tp.nodes_[out].grad;
    const Tensor& W2 = tp.value(out);
    Tensor& dc = tp.grad_ref(costs);
    for (const auto& rows : group_rows)
      for (std::size_t c = 0; c < W2.n_cols; ++c) {
        double dot = 0;
        for (std::size_t r : rows) dot += dW.at(r, c) * W2.at(r, c);
        for (std::size_t r : rows)
          dc.at(r, c) += (-1.0 / tau) * W2.at(r, c) * (dW.at(r, c) - dot);
      }
  };
  return out;
}

Tape::NodeId Tape::kl_div(NodeId p, NodeId q, double eps) {
  const Tensor& P = value(p);
  const Tensor& Q = value(q);
  if (!P.same_shape(Q)) shape_error("kl_div", P, Q);
  if (eps < 0) throw std::invalid_argument("kl_div: eps must be nonnegative");
  double k = static_cast<double>(P.n_cols);
  double loss = 0;
  for (std::size_t i = 0; i < P.data.size(); ++i) {
    double pv = P.data[i];
    if (pv <= 0) continue;
    double qs = (Q.data[i] + eps) / (1.0 + k * eps);
    loss += pv * std::log(pv / qs);
  }
  Tensor L = Tensor::scalar(loss);
  check_finite("kl_div", L);
  NodeId out = push(std::move(L), nullptr);
  nodes_[out].backward_fn = [p, q, out, eps](Tape& tp) {
    double g = tp.nodes_[out].grad.data[0];
    const Tensor& P2 = tp.value(p);
    const Tensor& Q2 = tp.value(q);
    Tensor& dq = tp.grad_ref(q);
    for (std::size_t i = 0; i < P2.data.size(); ++i) {
      double pv = P2.data[i];
      if (pv <= 0) continue;
      dq.data[i] += g * (-pv / (Q2.data[i] + eps));
    }
  };
  return out;
}

Tape::NodeId Tape::sum(NodeId a) {
  const Tensor& A = value(a);
  double s = 0;
  for (double v : A.data) s += v;
  Tensor L = Tensor::scalar(s);
  check_finite("sum", L);
  NodeId out = push(std::move(L), nullptr);
  nodes_[out].backward_fn = [a, out](Tape& tp) {
    double g = tp.nodes_[out].grad.data[0];
    Tensor& da = tp.grad_ref(a);
    for (double& v : da.data) v += g;
  };
  return out;
}

void Tape::backward(NodeId loss) {
  if (!value(loss).is_scalar())
    throw std::invalid_argument("backward: loss node must be scalar, got " +
                                value(loss).shape_str());
  if (in_backward_)
    throw std::logic_error("backward: tape already swept; build a fresh tape per step");
  in_backward_ = true;
  grad_ref(loss).data[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.data.empty()) continue;  // not on any path to the loss
    if (n.backward_fn) {
      n.backward_fn(*this);
      // interior gradients are fully consumed once their adjoint ran
      n.grad.data.clear();
      n.grad.data.shrink_to_fit();
    }
  }
}

}  // namespace gridalloc
