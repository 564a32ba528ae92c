#include "sgc/layers.hpp"

#include "sgc/error.hpp"

namespace sgc::inline SGC_PRECISION_TAG::nn {

using ad::Var;

Linear Linear::create(ParameterSet& params, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng, bool with_bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add_uniform(name + ".W", in, out, in, rng);
  if (with_bias) l.bias = params.add_uniform(name + ".b", 1, out, in, rng);
  return l;
}

Var Linear::operator()(const Var& x) const {
  if (x.cols() != in)
    throw ShapeError("linear layer expects width " + std::to_string(in) + ", got " +
                     x.value().shape_string());
  Var y = ad::matmul(x, weight);
  return bias ? ad::add(y, bias) : y;
}

GRUCell GRUCell::create(ParameterSet& params, const std::string& prefix, std::size_t width,
                        Rng& rng) {
  GRUCell c;
  c.width = width;
  auto sq = [&](const char* n) { return params.add_uniform(prefix + "." + n, width, width, width, rng); };
  auto row = [&](const char* n) { return params.add_uniform(prefix + "." + n, 1, width, width, rng); };
  c.W_z = sq("W_z");
  c.U_z = sq("U_z");
  c.b_z = row("b_z");
  c.W_r = sq("W_r");
  c.U_r = sq("U_r");
  c.b_r = row("b_r");
  c.W_h = sq("W_h");
  c.U_h = sq("U_h");
  c.b_h = row("b_h");
  return c;
}

Var gru_update(const GRUCell& cell, const Var& h, const Var& m) {
  if (h.cols() != cell.width || m.cols() != cell.width || h.rows() != m.rows())
    throw ShapeError("gru_update: cell width " + std::to_string(cell.width) + ", hidden " +
                     h.value().shape_string() + ", message " + m.value().shape_string());
  using namespace ad;
  Var z = sigmoid(add(add(matmul(m, cell.W_z), matmul(h, cell.U_z)), cell.b_z));
  Var r = sigmoid(add(add(matmul(m, cell.W_r), matmul(h, cell.U_r)), cell.b_r));
  Var c = tanh(add(add(matmul(m, cell.W_h), matmul(mul(r, h), cell.U_h)), cell.b_h));
  // (1 - z) * h + z * c == h + z * (c - h)
  return add(h, mul(z, sub(c, h)));
}

EdgeMessageNet EdgeMessageNet::create(ParameterSet& params, const std::string& prefix,
                                      std::size_t n_edge_types, std::size_t width,
                                      MessageKind kind, Rng& rng) {
  EdgeMessageNet net;
  net.kind = kind;
  net.width = width;
  for (std::size_t e = 0; e < n_edge_types; ++e) {
    const std::string p = prefix + ".e" + std::to_string(e);
    Fn fn;
    if (kind == MessageKind::linear) {
      fn.w1 = params.add_uniform(p + ".W", width, width, width, rng);
    } else {
      fn.w1 = params.add_uniform(p + ".W1", width, width, width, rng);
      fn.b1 = params.add_uniform(p + ".b1", 1, width, width, rng);
      fn.w2 = params.add_uniform(p + ".W2", width, width, width, rng);
      fn.b2 = params.add_uniform(p + ".b2", 1, width, width, rng);
    }
    net.fns.push_back(fn);
  }
  return net;
}

Var EdgeMessageNet::apply(std::size_t edge_type, const Var& h) const {
  const Fn& fn = fns.at(edge_type);
  if (kind == MessageKind::linear) return ad::matmul(h, fn.w1);
  Var hidden = ad::relu(ad::add(ad::matmul(h, fn.w1), fn.b1));
  return ad::add(ad::matmul(hidden, fn.w2), fn.b2);
}

EdgeSlices edge_slices(const graph::GraphTensors& g) {
  EdgeSlices out(g.n_edge_types);
  for (std::size_t e = 0; e < g.n_edge_types; ++e) {
    out[e].n = g.n;
    out[e].entries = g.edges(e);
  }
  return out;
}

EdgeSlices leading_slices(const EdgeSlices& slices, std::size_t count) {
  return EdgeSlices(slices.begin(), slices.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(count, slices.size())));
}

Var message_pass(const EdgeSlices& slices, const Var& h, const EdgeMessageNet& nets) {
  if (slices.size() != nets.n_edge_types())
    throw ShapeError("message_pass: graph has " + std::to_string(slices.size()) +
                     " edge types, message networks cover " +
                     std::to_string(nets.n_edge_types()));
  if (h.cols() != nets.width)
    throw ShapeError("message_pass: features " + h.value().shape_string() +
                     " do not match message width " + std::to_string(nets.width));
  Var total;
  for (std::size_t e = 0; e < slices.size(); ++e) {
    if (slices[e].entries.empty()) continue;  // contributes exactly zero
    Var m = ad::sparse_matmul(slices[e], nets.apply(e, h));
    total = total ? ad::add(total, m) : m;
  }
  if (!total) return ad::constant(Tensor(h.rows(), h.cols()));
  return total;
}

GatherGate GatherGate::create(ParameterSet& params, const std::string& prefix,
                              std::size_t final_width, std::size_t initial_width,
                              std::size_t out_width, Rng& rng) {
  GatherGate g;
  g.i_net = Linear::create(params, prefix + ".i", final_width + initial_width, out_width, rng);
  g.j_net = Linear::create(params, prefix + ".j", final_width, out_width, rng);
  return g;
}

Var gate_rows(const GatherGate& gate, const Var& h_final, const Var& h_initial) {
  Var gate_in = ad::concat(h_final, h_initial);
  return ad::mul(ad::sigmoid(gate.i_net(gate_in)), gate.j_net(h_final));
}

Var graph_gather(const GatherGate& gate, const Var& h_final, const Var& h_initial,
                 std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("graph_gather: no rows to gather (system without ligand atoms?)");
  Var hf = ad::select_rows(h_final, rows);
  Var hi = ad::select_rows(h_initial, rows);
  return ad::row_sum(gate_rows(gate, hf, hi));
}

FCStack FCStack::create(ParameterSet& params, const std::string& prefix, std::size_t in_width,
                        const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.empty()) throw ConfigError("fully connected head needs at least one layer");
  FCStack fc;
  std::size_t in = in_width;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    if (widths[k] == 0) throw ConfigError("fully connected width must be positive");
    fc.layers.push_back(Linear::create(params, prefix + ".fc" + std::to_string(k), in, widths[k], rng));
    in = widths[k];
  }
  return fc;
}

Var fc_forward(const FCStack& fc, const Var& x, Real dropout_p, bool train, Rng& rng) {
  Var h = x;
  for (std::size_t k = 0; k < fc.layers.size(); ++k) {
    h = ad::dropout(h, dropout_p, train, rng);
    h = fc.layers[k](h);
    if (k + 1 < fc.layers.size()) h = ad::relu(h);
  }
  return h;
}

}  // namespace sgc::inline SGC_PRECISION_TAG::nn
