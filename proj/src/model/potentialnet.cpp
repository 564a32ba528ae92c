#include "sgc/potentialnet.hpp"

#include <numeric>

#include "sgc/error.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

using ad::Var;

PotentialNetModel::PotentialNetModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t f_in = config_.input_width();
  const std::size_t n_bond = config_.schema.n_bond_types();
  const std::size_t n_et = config_.schema.n_edge_types();
  const nn::MessageKind kind = config_.effective_message_kind();

  auto make_stage = [&](const std::string& prefix, std::size_t n_types, std::size_t width,
                        std::size_t gate_out, std::size_t layers) {
    Stage s;
    s.messages = nn::EdgeMessageNet::create(params_, prefix + ".msg", n_types, width, kind, rng);
    s.gru = nn::GRUCell::create(params_, prefix + ".gru", width, rng);
    s.gate = nn::GatherGate::create(params_, prefix + ".gate", width, width, gate_out, rng);
    s.layers = layers;
    return s;
  };

  std::size_t head_in = 0;
  switch (config_.mode) {
    case ModelMode::staged:
    case ModelMode::ligand_only:
      bond_stage_ = make_stage("bond", n_bond, f_in, config_.f_bond, config_.bond_k);
      head_in = config_.f_bond;
      if (config_.spatial_k > 0) {
        if (config_.share_bond_messages) {
          Stage s;
          s.messages = nn::EdgeMessageNet::create(params_, "spatial.msg", n_et - n_bond,
                                                  config_.f_bond, kind, rng);
          s.messages.fns.insert(s.messages.fns.begin(), bond_stage_->messages.fns.begin(),
                                bond_stage_->messages.fns.end());
          s.gru = nn::GRUCell::create(params_, "spatial.gru", config_.f_bond, rng);
          s.gate = nn::GatherGate::create(params_, "spatial.gate", config_.f_bond,
                                          config_.f_bond, config_.f_spatial, rng);
          s.layers = config_.spatial_k;
          spatial_stage_ = std::move(s);
        } else {
          spatial_stage_ = make_stage("spatial", n_et, config_.f_bond, config_.f_spatial,
                                      config_.spatial_k);
        }
        head_in = config_.f_spatial;
      }
      break;
    case ModelMode::single_update:
      spatial_stage_ = make_stage("spatial", n_et, f_in, config_.f_spatial, config_.spatial_k);
      head_in = config_.f_spatial;
      break;
    case ModelMode::ggnn_plain:
      spatial_stage_ = make_stage("ggnn", n_et, f_in, config_.f_gather, config_.k);
      head_in = config_.f_gather;
      break;
  }
  head_ = nn::FCStack::create(params_, "head", head_in, config_.fc_widths, rng);
}

void PotentialNetModel::check_compatible(const graph::GraphTensors& g) const {
  if (g.x.cols != config_.input_width())
    throw ShapeError("schema mismatch: graph features have width " + std::to_string(g.x.cols) +
                     ", model expects " + std::to_string(config_.input_width()));
  if (g.n_edge_types != config_.schema.n_edge_types() ||
      g.n_bond_types != config_.schema.n_bond_types())
    throw ShapeError("schema mismatch: graph has " + std::to_string(g.n_edge_types) +
                     " edge types (" + std::to_string(g.n_bond_types) +
                     " bond), model expects " + std::to_string(config_.schema.n_edge_types()) +
                     " (" + std::to_string(config_.schema.n_bond_types()) + " bond)");
  if (g.n_ligand == 0 || g.n_ligand > g.n) throw ShapeError("graph has no ligand atoms");
}

Var PotentialNetModel::run_stage(const Stage& stage, const nn::EdgeSlices& slices, Var h) const {
  for (std::size_t layer = 0; layer < stage.layers; ++layer)
    h = nn::gru_update(stage.gru, h, nn::message_pass(slices, h, stage.messages));
  return h;
}

Var PotentialNetModel::forward(const graph::GraphTensors& input, bool train, Rng& rng) const {
  check_compatible(input);
  graph::GraphTensors restricted;
  const graph::GraphTensors* gp = &input;
  if (config_.mode == ModelMode::ligand_only && input.n_ligand != input.n) {
    restricted = graph::ligand_block(input);
    gp = &restricted;
  }
  const graph::GraphTensors& g = *gp;

  Var x = ad::constant(Tensor(g.n, g.x.cols, std::vector<Real>(g.x.data.begin(), g.x.data.end())));
  const nn::EdgeSlices all = nn::edge_slices(g);
  std::vector<std::size_t> ligand_rows(g.n_ligand);
  std::iota(ligand_rows.begin(), ligand_rows.end(), std::size_t{0});

  Var pooled;
  switch (config_.mode) {
    case ModelMode::staged:
    case ModelMode::ligand_only: {
      const nn::EdgeSlices bonds = nn::leading_slices(all, g.n_bond_types);
      Var h = run_stage(*bond_stage_, bonds, x);
      if (!spatial_stage_) {
        pooled = nn::graph_gather(bond_stage_->gate, h, x, ligand_rows);
        break;
      }
      Var h_bond = nn::gate_rows(bond_stage_->gate, h, x);
      Var h_sp = run_stage(*spatial_stage_, all, h_bond);
      pooled = nn::graph_gather(spatial_stage_->gate, h_sp, h_bond, ligand_rows);
      break;
    }
    case ModelMode::single_update: {
      Var h = run_stage(*spatial_stage_, all, x);
      pooled = nn::graph_gather(spatial_stage_->gate, h, x, ligand_rows);
      break;
    }
    case ModelMode::ggnn_plain: {
      Var h = run_stage(*spatial_stage_, all, x);
      std::vector<std::size_t> rows(g.n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      pooled = nn::graph_gather(spatial_stage_->gate, h, x, rows);
      break;
    }
  }
  return nn::fc_forward(head_, pooled, static_cast<Real>(config_.dropout), train, rng);
}

Var PotentialNetModel::forward(const graph::GraphTensors& g) const {
  Rng unused(0);
  return forward(g, false, unused);
}

std::vector<Tensor> loss_weights(
    const std::vector<const std::vector<std::optional<double>>*>& labels, std::size_t task_count,
    TaskKind kind) {
  std::vector<std::size_t> present_per_task(task_count, 0);
  std::size_t present_total = 0;
  for (const auto* row : labels) {
    if (row->size() != task_count)
      throw ShapeError("label vector has " + std::to_string(row->size()) + " tasks, model has " +
                       std::to_string(task_count));
    for (std::size_t t = 0; t < task_count; ++t)
      if ((*row)[t]) {
        ++present_per_task[t];
        ++present_total;
      }
  }
  if (present_total == 0) throw NumericError("loss undefined: every label is absent");
  std::size_t tasks_present = 0;
  for (std::size_t c : present_per_task) tasks_present += c > 0;

  std::vector<Tensor> out;
  for (const auto* row : labels) {
    Tensor w(1, task_count);
    for (std::size_t t = 0; t < task_count; ++t) {
      if (!(*row)[t]) continue;
      w[t] = kind == TaskKind::regression
                 ? static_cast<Real>(1.0 / static_cast<double>(present_total))
                 : static_cast<Real>(1.0 / (static_cast<double>(tasks_present) *
                                            static_cast<double>(present_per_task[t])));
    }
    out.push_back(std::move(w));
  }
  return out;
}

Var weighted_loss(const Var& pred, const std::vector<std::optional<double>>& labels,
                  const Tensor& weights, TaskKind kind) {
  Tensor targets(1, labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t)
    targets[t] = labels[t] ? static_cast<Real>(*labels[t]) : Real(0);
  if (kind == TaskKind::regression) return ad::squared_error(pred, targets, weights);
  return ad::bce_with_logits(pred, targets, weights);
}

Var loss(const Var& pred, const std::vector<std::optional<double>>& labels, TaskKind kind) {
  if (pred.rows() != 1 || pred.cols() != labels.size())
    throw ShapeError("loss: prediction " + pred.value().shape_string() + " does not match " +
                     std::to_string(labels.size()) + " labels");
  const auto weights = loss_weights({&labels}, labels.size(), kind);
  return weighted_loss(pred, labels, weights[0], kind);
}

Tensor predict_batch(const PotentialNetModel& model, std::span<const Sample> samples) {
  const std::size_t t = model.config().task_count;
  Tensor out(samples.size(), t);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    try {
      Var p = model.forward(samples[s].graph);
      std::copy_n(p.value().row(0), t, out.row(s));
    } catch (const Error& e) {
      throw Error(e.kind(), "sample '" + samples[s].id + "': " + e.what());
    }
  }
  return out;
}

}  // namespace sgc::inline SGC_PRECISION_TAG
