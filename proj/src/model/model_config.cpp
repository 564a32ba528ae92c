#include "sgc/error.hpp"
#include "sgc/potentialnet.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

using nlohmann::json;

std::string to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::staged: return "staged";
    case ModelMode::single_update: return "single_update";
    case ModelMode::ligand_only: return "ligand_only";
    case ModelMode::ggnn_plain: return "ggnn_plain";
  }
  return "staged";
}

std::string to_string(TaskKind kind) {
  return kind == TaskKind::regression ? "regression" : "multitask_classification";
}

ModelMode parse_model_mode(const std::string& s) {
  if (s == "staged") return ModelMode::staged;
  if (s == "single_update") return ModelMode::single_update;
  if (s == "ligand_only") return ModelMode::ligand_only;
  if (s == "ggnn_plain") return ModelMode::ggnn_plain;
  throw ConfigError("unknown model mode '" + s + "'");
}

TaskKind parse_task_kind(const std::string& s) {
  if (s == "regression") return TaskKind::regression;
  if (s == "multitask_classification" || s == "classification")
    return TaskKind::multitask_classification;
  throw ConfigError("unknown task kind '" + s + "'");
}

std::size_t ModelConfig::input_width() const {
  return chem::feature_width(chem::ElementVocab::from_symbols(element_vocab));
}

nn::MessageKind ModelConfig::effective_message_kind() const {
  if (message_kind) return *message_kind;
  return mode == ModelMode::ggnn_plain ? nn::MessageKind::linear : nn::MessageKind::mlp;
}

void ModelConfig::validate() const {
  schema.validate();
  chem::ElementVocab::from_symbols(element_vocab);
  if (task_count == 0) throw ConfigError("task_count must be positive");
  if (fc_widths.empty() || fc_widths.back() != task_count)
    throw ConfigError("last fully connected width must equal task_count (" +
                      std::to_string(task_count) + ")");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  switch (mode) {
    case ModelMode::staged:
    case ModelMode::ligand_only:
      if (bond_k == 0) throw ConfigError("bond_k must be at least 1");
      if (f_bond == 0 || (spatial_k > 0 && f_spatial == 0))
        throw ConfigError("gather widths must be positive");
      if (share_bond_messages && input_width() != f_bond)
        throw ConfigError("sharing bond message networks requires f_bond == input width (" +
                          std::to_string(input_width()) + ")");
      break;
    case ModelMode::single_update:
      if (spatial_k == 0) throw ConfigError("single_update needs spatial_k >= 1");
      if (f_spatial == 0) throw ConfigError("gather widths must be positive");
      break;
    case ModelMode::ggnn_plain:
      if (k == 0) throw ConfigError("ggnn_plain needs k >= 1");
      if (f_gather == 0) throw ConfigError("gather widths must be positive");
      break;
  }
}

namespace {

std::string bond_order_name(chem::BondOrder o) {
  switch (o) {
    case chem::BondOrder::single: return "single";
    case chem::BondOrder::double_: return "double";
    case chem::BondOrder::triple: return "triple";
    case chem::BondOrder::aromatic: return "aromatic";
  }
  return "single";
}

chem::BondOrder parse_bond_order(const std::string& s) {
  if (s == "single") return chem::BondOrder::single;
  if (s == "double") return chem::BondOrder::double_;
  if (s == "triple") return chem::BondOrder::triple;
  if (s == "aromatic") return chem::BondOrder::aromatic;
  throw ConfigError("unknown bond type '" + s + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

json schema_to_json(const graph::EdgeSchema& schema) {
  json bonds = json::array();
  for (auto o : schema.bond_types) bonds.push_back(bond_order_name(o));
  json bins = json::array();
  for (const auto& b : schema.distance_bins) bins.push_back({b.lower, b.upper});
  return {{"bond_types", bonds}, {"distance_bins", bins}};
}

graph::EdgeSchema schema_from_json(const json& j) {
  graph::EdgeSchema s;
  if (!j.is_object()) throw ConfigError("schema must be an object");
  if (j.contains("bond_types")) {
    s.bond_types.clear();
    for (const auto& b : j.at("bond_types")) {
      if (!b.is_string()) throw ConfigError("bond_types entries must be strings");
      s.bond_types.push_back(parse_bond_order(b.get<std::string>()));
    }
  }
  if (j.contains("distance_bins")) {
    s.distance_bins.clear();
    for (const auto& b : j.at("distance_bins")) {
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
        throw ConfigError("distance_bins entries must be [lower, upper] pairs");
      s.distance_bins.push_back({b[0].get<double>(), b[1].get<double>()});
    }
  }
  s.validate();
  return s;
}

json to_json(const ModelConfig& c) {
  json j{
      {"mode", to_string(c.mode)},
      {"task_kind", to_string(c.task_kind)},
      {"task_count", c.task_count},
      {"schema", schema_to_json(c.schema)},
      {"element_vocab", c.element_vocab},
      {"f_bond", c.f_bond},
      {"f_spatial", c.f_spatial},
      {"f_gather", c.f_gather},
      {"bond_k", c.bond_k},
      {"spatial_k", c.spatial_k},
      {"k", c.k},
      {"fc_widths", c.fc_widths},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"dropout", c.dropout},
      {"share_bond_messages", c.share_bond_messages},
      {"seed", c.seed},
  };
  if (c.message_kind)
    j["message_kind"] = *c.message_kind == nn::MessageKind::linear ? "linear" : "mlp";
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  c.mode = parse_model_mode(get_or<std::string>(j, "mode", "staged"));
  c.task_kind = parse_task_kind(get_or<std::string>(j, "task_kind", "regression"));
  c.task_count = get_or<std::size_t>(j, "task_count", 1);
  if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"));
  c.element_vocab = get_or(j, "element_vocab", c.element_vocab);
  c.f_bond = get_or(j, "f_bond", c.f_bond);
  c.f_spatial = get_or(j, "f_spatial", c.f_spatial);
  c.f_gather = get_or(j, "f_gather", c.f_gather);
  c.bond_k = get_or(j, "bond_k", c.bond_k);
  c.spatial_k = get_or(j, "spatial_k", c.spatial_k);
  c.k = get_or(j, "k", c.k);
  c.fc_widths = get_or(j, "fc_widths", std::vector<std::size_t>{128, c.task_count});
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
  c.dropout = get_or(j, "dropout", c.dropout);
  c.share_bond_messages = get_or(j, "share_bond_messages", c.share_bond_messages);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("message_kind")) {
    const auto kind = get_or<std::string>(j, "message_kind", "mlp");
    if (kind == "linear")
      c.message_kind = nn::MessageKind::linear;
    else if (kind == "mlp")
      c.message_kind = nn::MessageKind::mlp;
    else
      throw ConfigError("unknown message_kind '" + kind + "'");
  }
  c.validate();
  return c;
}

}  // namespace sgc::inline SGC_PRECISION_TAG
