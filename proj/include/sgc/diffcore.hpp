#pragma once

// Dense 2-D tensors with reverse-mode differentiation.
//
// Every tensor is a row-major matrix; a vector is 1 x n and a scalar 1 x 1.
// Reductions and matrix products accumulate in double precision.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sgc/config.hpp"
#include "sgc/random.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  std::string shape_string() const;
  bool empty() const { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  Real& operator[](std::size_t k) { return data_[k]; }
  Real operator[](std::size_t k) const { return data_[k]; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real* row(std::size_t r) { return data_.data() + r * cols_; }
  const Real* row(std::size_t r) const { return data_.data() + r * cols_; }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

namespace ad {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents.
  std::function<void(Node&)> backward;

  Tensor& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor(value.rows(), value.cols());
    return grad;
  }
};

/// Handle to a node of the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  /// Zero tensor of the value's shape when nothing has been accumulated.
  Tensor grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  void zero_grad() { node_->grad = Tensor(); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
/// Leaf that accumulates gradients.
Var leaf(Tensor value);

Var matmul(const Var& a, const Var& b);
/// a + b; b may be 1 x cols(a) and is then broadcast over rows.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise product; b may be a broadcast row.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, Real s);
Var add_scalar(const Var& a, Real s);
/// s - a
Var rsub_scalar(Real s, const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
/// Column sums: n x f -> 1 x f, independent of row order.
Var row_sum(const Var& a);
/// Sum of all entries: 1 x 1.
Var sum(const Var& a);
Var mean(const Var& a);
Var select_rows(const Var& a, std::span<const std::size_t> rows);
/// [a | b] along columns.
Var concat(const Var& a, const Var& b);
/// Inverted dropout. Identity when !train or p == 0.
Var dropout(const Var& a, Real p, bool train, Rng& rng);

/// Constant sparse n x n 0/1 matrix given as (row, col) pairs; computes A * b.
struct SparsePattern {
  std::size_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
};
Var sparse_matmul(const SparsePattern& a, const Var& b);

/// sum_ij w_ij * [max(x,0) - x*y + log(1 + exp(-|x|))]; w == 0 masks an entry.
Var bce_with_logits(const Var& logits, const Tensor& targets, const Tensor& weights);
/// sum_ij w_ij * (x - y)^2
Var squared_error(const Var& pred, const Tensor& targets, const Tensor& weights);

/// Populates gradients of every reachable leaf. Root must be 1 x 1.
void backward(const Var& root);

}  // namespace ad

struct Parameter {
  std::string name;
  ad::Var var;
};

/// Named trainable tensors in registration order.
class ParameterSet {
 public:
  ad::Var add(const std::string& name, Tensor init);
  /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
  ad::Var add_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                      std::size_t fan_in, Rng& rng);

  const std::vector<Parameter>& items() const { return items_; }
  ad::Var get(const std::string& name) const;
  bool contains(const std::string& name) const;
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> items_;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Decoupled weight decay (p -= lr*wd*p) followed by the bias-corrected Adam
/// update, using each parameter's accumulated gradient.
void adam_step(ParameterSet& params, AdamState& state, const OptimizerConfig& config);
void sgd_step(ParameterSet& params, const OptimizerConfig& config);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}
  void step(ParameterSet& params);
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  AdamState state_;
};

/// Checkpoint: "SGCK", u32 version, u32 metadata length + bytes, u32 record
/// count, then per record u32 name length + name, u32 rank, u32 dims[rank],
/// float32 values. Little-endian.
struct Checkpoint {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_checkpoint(std::ostream& out, const std::string& metadata, const ParameterSet& params);
Checkpoint read_checkpoint(std::istream& in);
/// Copies checkpoint values into matching parameters; names and shapes must agree.
void load_parameters(ParameterSet& params, const Checkpoint& checkpoint);

}  // namespace sgc::inline SGC_PRECISION_TAG
