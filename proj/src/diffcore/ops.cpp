#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sgc/diffcore.hpp"
#include "sgc/error.hpp"

namespace sgc::inline SGC_PRECISION_TAG::ad {
namespace {

using NodePtr = std::shared_ptr<Node>;

Var make(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || p->requires_grad;
  if (needs_grad) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

// True when b broadcasts over the rows of a, false when shapes match.
bool broadcast_row(const char* op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return false;
  if (b.rows() == 1 && b.cols() == a.cols()) return true;
  shape_mismatch(op, a, b);
}

// Adds g (shape of a) into the grad of a broadcast row parent.
void accumulate_broadcast(Node& parent, const Tensor& g) {
  Tensor& pg = parent.grad_buffer();
  for (std::size_t j = 0; j < g.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) s += g(i, j);
    pg[j] += static_cast<Real>(s);
  }
}

void accumulate(Node& parent, const Tensor& g) {
  Tensor& pg = parent.grad_buffer();
  for (std::size_t k = 0; k < g.size(); ++k) pg[k] += g[k];
}

template <class Forward, class Derivative>
Var unary(const Var& a, Forward f, Derivative df) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = f(x[k]);
  return make(std::move(y), {a.shared()}, [df](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor& pg = p.grad_buffer();
    for (std::size_t k = 0; k < self.grad.size(); ++k)
      pg[k] += self.grad[k] * df(p.value[k], self.value[k]);
  });
}

Real stable_sigmoid(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

}  // namespace

Tensor Var::grad() const {
  if (node_->grad.empty()) return Tensor(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) shape_mismatch("matmul", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C(n, m);
  std::vector<double> acc(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const Real* arow = A.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const Real* brow = B.row(p);
      for (std::size_t j = 0; j < m; ++j) acc[j] += av * brow[j];
    }
    Real* crow = C.row(i);
    for (std::size_t j = 0; j < m; ++j) crow[j] = static_cast<Real>(acc[j]);
  }
  return make(std::move(C), {a.shared(), b.shared()}, [n, k, m](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const Tensor& G = self.grad;
    if (pa.requires_grad) {
      // dA = G * B^T
      Tensor& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const Real* grow = G.row(i);
        for (std::size_t p = 0; p < k; ++p) {
          const Real* brow = pb.value.row(p);
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += static_cast<double>(grow[j]) * brow[j];
          ga(i, p) += static_cast<Real>(s);
        }
      }
    }
    if (pb.requires_grad) {
      // dB = A^T * G
      std::vector<double> acc(k * m, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const Real* arow = pa.value.row(i);
        const Real* grow = G.row(i);
        for (std::size_t p = 0; p < k; ++p) {
          const double av = arow[p];
          if (av == 0.0) continue;
          double* dst = acc.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) dst[j] += av * grow[j];
        }
      }
      Tensor& gb = pb.grad_buffer();
      for (std::size_t q = 0; q < k * m; ++q) gb[q] += static_cast<Real>(acc[q]);
    }
  });
}

Var add(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool bc = broadcast_row("add", A, B);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) C(i, j) = A(i, j) + (bc ? B[j] : B(i, j));
  return make(std::move(C), {a.shared(), b.shared()}, [bc](Node& self) {
    if (self.parents[0]->requires_grad) accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      if (bc)
        accumulate_broadcast(*self.parents[1], self.grad);
      else
        accumulate(*self.parents[1], self.grad);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool bc = broadcast_row("sub", A, B);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) C(i, j) = A(i, j) - (bc ? B[j] : B(i, j));
  return make(std::move(C), {a.shared(), b.shared()}, [bc](Node& self) {
    if (self.parents[0]->requires_grad) accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      Tensor neg = self.grad;
      for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -neg[k];
      if (bc)
        accumulate_broadcast(*self.parents[1], neg);
      else
        accumulate(*self.parents[1], neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool bc = broadcast_row("mul", A, B);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) C(i, j) = A(i, j) * (bc ? B[j] : B(i, j));
  return make(std::move(C), {a.shared(), b.shared()}, [bc](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const Tensor& G = self.grad;
    if (pa.requires_grad) {
      Tensor& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < G.rows(); ++i)
        for (std::size_t j = 0; j < G.cols(); ++j)
          ga(i, j) += G(i, j) * (bc ? pb.value[j] : pb.value(i, j));
    }
    if (pb.requires_grad) {
      Tensor t(G.rows(), G.cols());
      for (std::size_t k = 0; k < G.size(); ++k) t[k] = G[k] * pa.value[k];
      if (bc)
        accumulate_broadcast(pb, t);
      else
        accumulate(pb, t);
    }
  });
}

Var scale(const Var& a, Real s) {
  return unary(
      a, [s](Real x) { return s * x; }, [s](Real, Real) { return s; });
}

Var add_scalar(const Var& a, Real s) {
  return unary(
      a, [s](Real x) { return x + s; }, [](Real, Real) { return Real(1); });
}

Var rsub_scalar(Real s, const Var& a) {
  return unary(
      a, [s](Real x) { return s - x; }, [](Real, Real) { return Real(-1); });
}

Var sigmoid(const Var& a) {
  return unary(a, stable_sigmoid, [](Real, Real y) { return y * (Real(1) - y); });
}

Var tanh(const Var& a) {
  return unary(
      a, [](Real x) { return std::tanh(x); }, [](Real, Real y) { return Real(1) - y * y; });
}

Var relu(const Var& a) {
  return unary(
      a, [](Real x) { return x > 0 ? x : Real(0); },
      [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

Var row_sum(const Var& a) {
  const Tensor& A = a.value();
  Tensor out(1, A.cols());
  std::vector<Real> col(A.rows());
  for (std::size_t j = 0; j < A.cols(); ++j) {
    for (std::size_t i = 0; i < A.rows(); ++i) col[i] = A(i, j);
    // Fixed summation order, so the result ignores row order bit for bit.
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (Real v : col) s += v;
    out[j] = static_cast<Real>(s);
  }
  return make(std::move(out), {a.shared()}, [](Node& self) {
    Node& p = *self.parents[0];
    Tensor& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += self.grad[j];
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (Real v : a.value().data()) s += v;
  return make(Tensor(1, 1, static_cast<Real>(s)), {a.shared()}, [](Node& self) {
    Node& p = *self.parents[0];
    Tensor& g = p.grad_buffer();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[0];
  });
}

Var mean(const Var& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  double s = 0.0;
  for (Real v : a.value().data()) s += v;
  return make(Tensor(1, 1, static_cast<Real>(s / static_cast<double>(n))), {a.shared()},
              [n](Node& self) {
                Node& p = *self.parents[0];
                Tensor& g = p.grad_buffer();
                const Real d = self.grad[0] / static_cast<Real>(n);
                for (std::size_t k = 0; k < g.size(); ++k) g[k] += d;
              });
}

Var select_rows(const Var& a, std::span<const std::size_t> rows) {
  const Tensor& A = a.value();
  Tensor out(rows.size(), A.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= A.rows())
      throw ShapeError("select_rows: row " + std::to_string(rows[k]) + " out of range for " +
                       A.shape_string());
    std::copy_n(A.row(rows[k]), A.cols(), out.row(k));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make(std::move(out), {a.shared()}, [idx = std::move(idx)](Node& self) {
    Node& p = *self.parents[0];
    Tensor& g = p.grad_buffer();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < g.cols(); ++j) g(idx[k], j) += self.grad(k, j);
  });
}

Var concat(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows()) shape_mismatch("concat", A, B);
  const std::size_t ca = A.cols(), cb = B.cols();
  Tensor out(A.rows(), ca + cb);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    std::copy_n(A.row(i), ca, out.row(i));
    std::copy_n(B.row(i), cb, out.row(i) + ca);
  }
  return make(std::move(out), {a.shared(), b.shared()}, [ca, cb](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.rows(); ++i) {
      const Real* g = self.grad.row(i);
      if (pa.requires_grad) {
        Real* d = pa.grad_buffer().row(i);
        for (std::size_t j = 0; j < ca; ++j) d[j] += g[j];
      }
      if (pb.requires_grad) {
        Real* d = pb.grad_buffer().row(i);
        for (std::size_t j = 0; j < cb; ++j) d[j] += g[ca + j];
      }
    }
  });
}

Var dropout(const Var& a, Real p, bool train, Rng& rng) {
  if (!train || p <= 0) return a;
  if (p >= 1) throw ShapeError("dropout: probability must be below 1");
  const Tensor& A = a.value();
  Tensor mask(A.rows(), A.cols());
  const Real keep_scale = Real(1) / (Real(1) - p);
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = rng.uniform() < p ? Real(0) : keep_scale;
  return mul(a, constant(std::move(mask)));
}

Var sparse_matmul(const SparsePattern& a, const Var& b) {
  const Tensor& B = b.value();
  if (a.n != B.rows())
    throw ShapeError("sparse_matmul: pattern of order " + std::to_string(a.n) +
                     " applied to " + B.shape_string());
  const std::size_t f = B.cols();
  std::vector<double> acc(a.n * f, 0.0);
  for (const auto& [i, j] : a.entries) {
    const Real* src = B.row(j);
    double* dst = acc.data() + static_cast<std::size_t>(i) * f;
    for (std::size_t c = 0; c < f; ++c) dst[c] += src[c];
  }
  Tensor out(a.n, f);
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<Real>(acc[k]);
  return make(std::move(out), {b.shared()}, [entries = a.entries, n = a.n, f](Node& self) {
    std::vector<double> acc(n * f, 0.0);
    for (const auto& [i, j] : entries) {
      const Real* g = self.grad.row(i);
      double* dst = acc.data() + static_cast<std::size_t>(j) * f;
      for (std::size_t c = 0; c < f; ++c) dst[c] += g[c];
    }
    Tensor& gb = self.parents[0]->grad_buffer();
    for (std::size_t k = 0; k < acc.size(); ++k) gb[k] += static_cast<Real>(acc[k]);
  });
}

Var bce_with_logits(const Var& logits, const Tensor& targets, const Tensor& weights) {
  const Tensor& X = logits.value();
  if (!X.same_shape(targets)) shape_mismatch("bce_with_logits", X, targets);
  if (!X.same_shape(weights)) shape_mismatch("bce_with_logits", X, weights);
  double s = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (weights[k] == 0) continue;
    const double x = X[k], y = targets[k];
    s += weights[k] * (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))));
  }
  return make(Tensor(1, 1, static_cast<Real>(s)), {logits.shared()},
              [targets, weights](Node& self) {
                Node& p = *self.parents[0];
                Tensor& g = p.grad_buffer();
                for (std::size_t k = 0; k < g.size(); ++k)
                  if (weights[k] != 0)
                    g[k] += self.grad[0] * weights[k] * (stable_sigmoid(p.value[k]) - targets[k]);
              });
}

Var squared_error(const Var& pred, const Tensor& targets, const Tensor& weights) {
  const Tensor& X = pred.value();
  if (!X.same_shape(targets)) shape_mismatch("squared_error", X, targets);
  if (!X.same_shape(weights)) shape_mismatch("squared_error", X, weights);
  double s = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (weights[k] == 0) continue;
    const double d = static_cast<double>(X[k]) - targets[k];
    s += weights[k] * d * d;
  }
  return make(Tensor(1, 1, static_cast<Real>(s)), {pred.shared()},
              [targets, weights](Node& self) {
                Node& p = *self.parents[0];
                Tensor& g = p.grad_buffer();
                for (std::size_t k = 0; k < g.size(); ++k)
                  if (weights[k] != 0)
                    g[k] += self.grad[0] * weights[k] * Real(2) * (p.value[k] - targets[k]);
              });
}

void backward(const Var& root) {
  const Tensor& v = root.value();
  if (v.rows() != 1 || v.cols() != 1)
    throw ShapeError("backward: root must be a 1 x 1 scalar, got " + v.shape_string());
  Node* start = root.node();
  if (!start->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{start, 0}};
  visited.insert(start);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  start->grad_buffer()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;
    if (!node->grad.empty()) node->backward(*node);
    node->grad = Tensor();
  }
}

}  // namespace sgc::inline SGC_PRECISION_TAG::ad
