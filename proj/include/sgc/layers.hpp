#pragma once

// Graph-convolution building blocks: GRU node update, per-edge-type message
// networks, gated gather, fully connected head.

#include <string>
#include <vector>

#include "sgc/diffcore.hpp"
#include "sgc/graphbuild.hpp"

namespace sgc::inline SGC_PRECISION_TAG::nn {

/// y = x W + b (row-vector convention; W is in x out).
struct Linear {
  ad::Var weight;
  ad::Var bias;  // empty when created without bias
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParameterSet& params, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng, bool with_bias = true);
  ad::Var operator()(const ad::Var& x) const;
};

/// z = sigma(m W_z + h U_z + b_z), r = sigma(m W_r + h U_r + b_r),
/// c = tanh(m W_h + (r * h) U_h + b_h), h' = (1 - z) * h + z * c.
struct GRUCell {
  ad::Var W_z, U_z, b_z;
  ad::Var W_r, U_r, b_r;
  ad::Var W_h, U_h, b_h;
  std::size_t width = 0;

  static GRUCell create(ParameterSet& params, const std::string& prefix, std::size_t width,
                        Rng& rng);
};

ad::Var gru_update(const GRUCell& cell, const ad::Var& h, const ad::Var& m);

enum class MessageKind { linear, mlp };

/// One message function per edge type. `linear` is h W^(e); `mlp` is
/// relu(h W1 + b1) W2 + b2 with hidden width equal to the feature width.
struct EdgeMessageNet {
  struct Fn {
    ad::Var w1, b1, w2, b2;  // linear kind uses w1 only
  };
  MessageKind kind = MessageKind::mlp;
  std::size_t width = 0;
  std::vector<Fn> fns;

  static EdgeMessageNet create(ParameterSet& params, const std::string& prefix,
                               std::size_t n_edge_types, std::size_t width, MessageKind kind,
                               Rng& rng);
  std::size_t n_edge_types() const { return fns.size(); }
  ad::Var apply(std::size_t edge_type, const ad::Var& h) const;
};

/// Adjacency slices as sparse patterns, one per edge type.
using EdgeSlices = std::vector<ad::SparsePattern>;
EdgeSlices edge_slices(const graph::GraphTensors& g);
/// Keeps the first `count` slices.
EdgeSlices leading_slices(const EdgeSlices& slices, std::size_t count);

/// m_i = sum_e sum_j A[i,j,e] NN^(e)(h_j).
ad::Var message_pass(const EdgeSlices& slices, const ad::Var& h, const EdgeMessageNet& nets);

/// sigma(i_net([h_final | h_initial])) * j_net(h_final), per row.
struct GatherGate {
  Linear i_net;
  Linear j_net;

  static GatherGate create(ParameterSet& params, const std::string& prefix,
                           std::size_t final_width, std::size_t initial_width,
                           std::size_t out_width, Rng& rng);
  std::size_t out_width() const { return j_net.out; }
};

/// Gated per-row feature map (n x f_out), no reduction.
ad::Var gate_rows(const GatherGate& gate, const ad::Var& h_final, const ad::Var& h_initial);

/// Sum of gated rows over `rows` (1 x f_out). Throws on empty `rows`.
ad::Var graph_gather(const GatherGate& gate, const ad::Var& h_final, const ad::Var& h_initial,
                     std::span<const std::size_t> rows);

/// Fully connected stack; ReLU after every layer but the last.
struct FCStack {
  std::vector<Linear> layers;

  static FCStack create(ParameterSet& params, const std::string& prefix, std::size_t in_width,
                        const std::vector<std::size_t>& widths, Rng& rng);
  std::size_t out_width() const { return layers.empty() ? 0 : layers.back().out; }
};

/// Dropout with probability `dropout_p` precedes each layer in training mode.
ad::Var fc_forward(const FCStack& fc, const ad::Var& x, Real dropout_p, bool train, Rng& rng);

}  // namespace sgc::inline SGC_PRECISION_TAG::nn
