#include "gradcheck.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "sgc/error.hpp"
#include "sgc/layers.hpp"
#include "sgc/potentialnet.hpp"
#include "synth.hpp"

static_assert(sizeof(sgc::Real) == 8, "gradient checks need the double-precision build");

namespace sgc::testing {
namespace {

using ad::Var;

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Reduces any output to a scalar with fixed random weights.
Var project(const Var& out, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(out, ad::constant(random_tensor(rng, out.rows(), out.cols()))));
}

bool close(double a, double n) {
  const double err = std::abs(a - n);
  return err <= kGradAbsFloor || err <= kGradRelTol * std::max(std::abs(a), std::abs(n));
}

GradCheckResult check(const std::string& name, const std::function<Var()>& f,
                      const std::vector<Var>& inputs) {
  GradCheckResult res;
  res.name = name;
  for (auto v : inputs) v.zero_grad();
  ad::backward(f());
  std::vector<Tensor> analytic;
  for (const auto& v : inputs) analytic.push_back(v.grad());

  auto eval = [&] { return static_cast<double>(f().value()[0]); };
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Var v = inputs[k];
    for (std::size_t i = 0; i < v.value().size(); ++i) {
      const double orig = v.value()[i];
      auto at = [&](double x) {
        v.mutable_value()[i] = x;
        const double y = eval();
        v.mutable_value()[i] = orig;
        return y;
      };
      const double a = analytic[k][i];
      const double numeric = (at(orig + kGradStep) - at(orig - kGradStep)) / (2 * kGradStep);
      ++res.coordinates;
      bool ok = close(a, numeric);
      if (!ok) {
        // Non-smooth point (ReLU kink) inside the stencil: the analytic value
        // must then equal one of the one-sided derivatives.
        const double h = 1e-7;
        const double f0 = eval();
        const double right = (at(orig + h) - f0) / h;
        const double left = (f0 - at(orig - h)) / h;
        const bool kink = !close(right, left) || !close(numeric, right);
        if (kink && (std::abs(a - right) <= 1e-5 + kGradRelTol * std::abs(right) ||
                     std::abs(a - left) <= 1e-5 + kGradRelTol * std::abs(left))) {
          ok = true;
          ++res.kinks;
          continue;
        }
      }
      const double err = std::abs(a - numeric);
      res.max_abs_error = std::max(res.max_abs_error, err);
      if (err > kGradAbsFloor)
        res.max_rel_error =
            std::max(res.max_rel_error, err / std::max(std::abs(a), std::abs(numeric)));
      if (!ok && res.pass) {
        res.pass = false;
        std::ostringstream msg;
        msg << "input " << k << " entry " << i << ": analytic " << a << " numeric " << numeric;
        res.detail = msg.str();
      }
    }
  }
  return res;
}

std::vector<Var> param_vars(const ParameterSet& params) {
  std::vector<Var> out;
  for (const auto& p : params.items()) out.push_back(p.var);
  return out;
}

ad::SparsePattern random_pattern(Rng& rng, std::size_t n, double density) {
  ad::SparsePattern p;
  p.n = n;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) p.entries.emplace_back(i, j);
  return p;
}

}  // namespace

std::vector<GradCheckResult> check_primitives(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  const std::size_t n = 2 + rng.below(5);  // 2..6
  const std::size_t f = 2 + rng.below(7);  // 2..8
  const std::size_t g = 2 + rng.below(7);

  Var a = ad::leaf(random_tensor(rng, n, f));
  Var b = ad::leaf(random_tensor(rng, n, f));
  Var row = ad::leaf(random_tensor(rng, 1, f));
  Var w = ad::leaf(random_tensor(rng, f, g));
  // Keep ReLU inputs away from zero so central differences are smooth.
  Tensor rv = random_tensor(rng, n, f, 0.1, 1.0);
  for (std::size_t i = 0; i < rv.size(); ++i)
    if (rng.uniform() < 0.5) rv[i] = -rv[i];
  Var r = ad::leaf(rv);

  out.push_back(check("matmul", [&] { return project(ad::matmul(a, w), 1); }, {a, w}));
  out.push_back(check("add", [&] { return project(ad::add(a, b), 2); }, {a, b}));
  out.push_back(check("add_broadcast", [&] { return project(ad::add(a, row), 3); }, {a, row}));
  out.push_back(check("sub", [&] { return project(ad::sub(a, b), 4); }, {a, b}));
  out.push_back(check("sub_broadcast", [&] { return project(ad::sub(a, row), 5); }, {a, row}));
  out.push_back(check("mul", [&] { return project(ad::mul(a, b), 6); }, {a, b}));
  out.push_back(check("mul_broadcast", [&] { return project(ad::mul(a, row), 7); }, {a, row}));
  out.push_back(check("scale", [&] { return project(ad::scale(a, Real(-1.7)), 8); }, {a}));
  out.push_back(check("add_scalar", [&] { return project(ad::add_scalar(a, Real(0.3)), 9); }, {a}));
  out.push_back(check("rsub_scalar", [&] { return project(ad::rsub_scalar(Real(1), a), 10); }, {a}));
  out.push_back(check("sigmoid", [&] { return project(ad::sigmoid(a), 11); }, {a}));
  out.push_back(check("tanh", [&] { return project(ad::tanh(a), 12); }, {a}));
  out.push_back(check("relu", [&] { return project(ad::relu(r), 13); }, {r}));
  out.push_back(check("row_sum", [&] { return project(ad::row_sum(a), 14); }, {a}));
  out.push_back(check("sum", [&] { return ad::sum(ad::mul(a, b)); }, {a, b}));
  out.push_back(check("mean", [&] { return ad::mean(ad::mul(a, b)); }, {a, b}));
  std::vector<std::size_t> rows{n - 1, 0, n - 1};
  out.push_back(check("select_rows", [&] { return project(ad::select_rows(a, rows), 15); }, {a}));
  out.push_back(check("concat", [&] { return project(ad::concat(a, b), 16); }, {a, b}));
  out.push_back(check("dropout", [&] {
    Rng mask(99);
    return project(ad::dropout(a, Real(0.4), true, mask), 17);
  }, {a}));
  const auto pattern = random_pattern(rng, n, 0.5);
  out.push_back(check("sparse_matmul", [&] { return project(ad::sparse_matmul(pattern, a), 18); }, {a}));

  Tensor targets(n, f), weights(n, f);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    targets[i] = rng.uniform() < 0.5 ? 0 : 1;
    weights[i] = rng.uniform() < 0.2 ? 0 : rng.uniform(0.1, 1.0);
  }
  Var logits = ad::leaf(random_tensor(rng, n, f, -3, 3));
  out.push_back(check("bce_with_logits", [&] { return ad::bce_with_logits(logits, targets, weights); }, {logits}));
  Tensor reg = random_tensor(rng, n, f);
  out.push_back(check("squared_error", [&] { return ad::squared_error(a, reg, weights); }, {a}));
  return out;
}

std::vector<GradCheckResult> check_layers(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  const std::size_t n = 3 + rng.below(4);  // 3..6
  const std::size_t f = 4 + rng.below(5);  // 4..8

  {
    ParameterSet ps;
    auto lin = nn::Linear::create(ps, "lin", f, 5, rng);
    Var x = ad::leaf(random_tensor(rng, n, f));
    auto vars = param_vars(ps);
    vars.push_back(x);
    out.push_back(check("linear", [&] { return project(lin(x), 21); }, vars));
  }
  {
    ParameterSet ps;
    auto cell = nn::GRUCell::create(ps, "gru", f, rng);
    Var h = ad::leaf(random_tensor(rng, n, f));
    Var m = ad::leaf(random_tensor(rng, n, f));
    auto vars = param_vars(ps);
    vars.push_back(h);
    vars.push_back(m);
    out.push_back(check("gru_update", [&] { return project(nn::gru_update(cell, h, m), 22); }, vars));
  }
  for (auto kind : {nn::MessageKind::linear, nn::MessageKind::mlp}) {
    ParameterSet ps;
    auto nets = nn::EdgeMessageNet::create(ps, "msg", 3, f, kind, rng);
    nn::EdgeSlices slices{random_pattern(rng, n, 0.4), random_pattern(rng, n, 0.4),
                          ad::SparsePattern{n, {}}};
    Var h = ad::leaf(random_tensor(rng, n, f));
    auto vars = param_vars(ps);
    vars.push_back(h);
    out.push_back(check(kind == nn::MessageKind::linear ? "message_pass_linear" : "message_pass_mlp",
                        [&] { return project(nn::message_pass(slices, h, nets), 23); }, vars));
  }
  {
    ParameterSet ps;
    auto gate = nn::GatherGate::create(ps, "gate", f, f + 1, 6, rng);
    Var hf = ad::leaf(random_tensor(rng, n, f));
    Var hi = ad::leaf(random_tensor(rng, n, f + 1));
    auto vars = param_vars(ps);
    vars.push_back(hf);
    vars.push_back(hi);
    out.push_back(check("gate_rows", [&] { return project(nn::gate_rows(gate, hf, hi), 24); }, vars));
    std::vector<std::size_t> rows{0, n - 1};
    out.push_back(check("graph_gather",
                        [&] { return project(nn::graph_gather(gate, hf, hi, rows), 25); }, vars));
  }
  {
    ParameterSet ps;
    auto fc = nn::FCStack::create(ps, "fc", f, {7, 5, 2}, rng);
    Var x = ad::leaf(random_tensor(rng, 1, f));
    auto vars = param_vars(ps);
    vars.push_back(x);
    out.push_back(check("fc_forward", [&] {
      Rng mask(5);
      return project(nn::fc_forward(fc, x, Real(0.25), true, mask), 26);
    }, vars));
  }
  return out;
}

std::vector<GradCheckResult> check_models(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  graph::EdgeSchema schema;
  const auto vocab = chem::ElementVocab::from_symbols({"C", "N", "O"});
  std::vector<graph::GraphTensors> graphs;
  std::vector<graph::GraphTensors> ligands;
  for (int k = 0; k < 2; ++k) {
    ComplexSpec spec;
    spec.ligand_min = 3;
    spec.ligand_max = 4;
    spec.fragments = 1;
    spec.fragment_atoms = 2;
    auto sys = random_complex(rng, "toy" + std::to_string(k), spec);
    graphs.push_back(graph::build_graph(sys, schema, vocab));
    ligands.push_back(graph::ligand_block(graphs.back()));
  }
  const std::vector<std::vector<std::optional<double>>> labels{{0.7, -0.2}, {std::nullopt, 1.3}};

  auto run = [&](const std::string& name, ModelMode mode, TaskKind kind,
                 const std::vector<graph::GraphTensors>& batch) {
    ModelConfig c;
    c.mode = mode;
    c.task_kind = kind;
    c.task_count = 2;
    c.schema = schema;
    c.element_vocab = vocab.symbols();
    c.f_bond = c.f_spatial = c.f_gather = 6;
    c.bond_k = 1;
    c.spatial_k = 1;
    c.k = 2;
    c.fc_widths = {5, 2};
    c.dropout = 0.2;
    c.seed = seed + 17;
    PotentialNetModel model(c);
    std::vector<std::vector<std::optional<double>>> lab = labels;
    if (kind == TaskKind::multitask_classification) lab = {{1.0, 0.0}, {std::nullopt, 1.0}};
    auto f = [&] {
      const auto weights =
          loss_weights({&lab[0], &lab[1]}, 2, kind);
      Var total;
      for (std::size_t s = 0; s < batch.size(); ++s) {
        Rng drop(100 + s);
        Var l = weighted_loss(model.forward(batch[s], true, drop), lab[s], weights[s], kind);
        total = s == 0 ? l : ad::add(total, l);
      }
      return total;
    };
    out.push_back(check(name, f, param_vars(model.parameters())));
  };
  run("model_staged", ModelMode::staged, TaskKind::regression, graphs);
  run("model_staged_classification", ModelMode::staged, TaskKind::multitask_classification, graphs);
  run("model_single_update", ModelMode::single_update, TaskKind::regression, graphs);
  run("model_ligand_only", ModelMode::ligand_only, TaskKind::regression, ligands);
  run("model_ggnn_plain", ModelMode::ggnn_plain, TaskKind::regression, graphs);
  return out;
}

bool checker_detects_wrong_gradient() {
  Rng rng(3);
  Var a = ad::leaf(random_tensor(rng, 3, 4));
  // Gradient of sum(a * 2) is computed, but the function reports sum(a * 2.001).
  bool first = true;
  auto f = [&] {
    Var y = ad::sum(ad::scale(a, Real(first ? 2.0 : 2.001)));
    first = false;
    return y;
  };
  return !check("wrong", f, {a}).pass;
}

}  // namespace sgc::testing
