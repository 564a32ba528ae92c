#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgc/error.hpp"
#include "sgc/harness.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

using nlohmann::json;

namespace {

template <class T>
void check_subset(const std::vector<T>& values, const std::vector<T>& domain, const char* name) {
  if (values.empty()) throw ConfigError(std::string("grid '") + name + "' is empty");
  for (const auto& v : values)
    if (std::find(domain.begin(), domain.end(), v) == domain.end())
      throw ConfigError(std::string("grid '") + name +
                        "' holds a value outside the default domain; set "
                        "allow_grid_override to use it");
}

// Hidden layers only; the output width is always the task count.
std::vector<std::size_t> hidden_part(const std::vector<std::size_t>& w) {
  return w.empty() ? w : std::vector<std::size_t>(w.begin(), w.end() - 1);
}

template <class T>
void read_if(const json& j, const char* key, T& target) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    target = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).string();
}

}  // namespace

void SearchSpace::check_within_defaults() const {
  const SearchSpace d;
  check_subset(stage_widths, d.stage_widths, "stage_widths");
  check_subset(bond_k, d.bond_k, "bond_k");
  check_subset(spatial_k, d.spatial_k, "spatial_k");
  check_subset(f_gather, d.f_gather, "f_gather");
  check_subset(k, d.k, "k");
  check_subset(learning_rate, d.learning_rate, "learning_rate");
  check_subset(weight_decay, d.weight_decay, "weight_decay");
  check_subset(dropout, d.dropout, "dropout");
  std::vector<std::vector<std::size_t>> hidden, hidden_default;
  for (const auto& w : fc_widths) hidden.push_back(hidden_part(w));
  for (const auto& w : d.fc_widths) hidden_default.push_back(hidden_part(w));
  check_subset(hidden, hidden_default, "fc_widths");
}

void ExperimentConfig::validate() const {
  model.validate();
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (folds == 0) throw ConfigError("cv_folds must be at least 1");
  if (cv_mode == CvMode::kfold && folds < 2) throw ConfigError("kfold needs cv_folds >= 2");
  if (fold_order != "random" && fold_order != "temporal")
    throw ConfigError("fold_order must be 'random' or 'temporal'");
  if (fold_order == "temporal" && dates_path.empty())
    throw ConfigError("temporal fold order needs a dates file");
  if (!(chi > 0.0 && chi <= 1.0)) throw ConfigError("chi must lie in (0, 1]");
  for (const auto& w : grid.fc_widths)
    if (w.empty()) throw ConfigError("grid fc_widths entries must be nonempty");
  if (!allow_grid_override) grid.check_within_defaults();
}

json to_json(const ExperimentConfig& c) {
  return {
      {"data", c.data_path},
      {"folds", c.folds_path},
      {"model", to_json(c.model)},
      {"grid",
       {{"stage_widths", c.grid.stage_widths},
        {"bond_k", c.grid.bond_k},
        {"spatial_k", c.grid.spatial_k},
        {"f_gather", c.grid.f_gather},
        {"k", c.grid.k},
        {"fc_widths", c.grid.fc_widths},
        {"learning_rate", c.grid.learning_rate},
        {"weight_decay", c.grid.weight_decay},
        {"dropout", c.grid.dropout}}},
      {"allow_grid_override", c.allow_grid_override},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"cv_folds", c.folds},
      {"cv_mode", c.cv_mode == CvMode::kfold ? "kfold" : "fixed"},
      {"fold_order", c.fold_order},
      {"dates", c.dates_path},
      {"seed", c.seed},
      {"chi", c.chi},
      {"workers", c.workers},
      {"batch_threads", c.batch_threads},
      {"output_dir", c.output_dir},
  };
}

ExperimentConfig experiment_config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  read_if(j, "data", c.data_path);
  read_if(j, "folds", c.folds_path);
  read_if(j, "dates", c.dates_path);
  read_if(j, "output_dir", c.output_dir);
  c.data_path = resolve(c.data_path, base_dir);
  c.folds_path = resolve(c.folds_path, base_dir);
  c.dates_path = resolve(c.dates_path, base_dir);
  c.output_dir = resolve(c.output_dir, base_dir);
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    read_if(g, "stage_widths", c.grid.stage_widths);
    read_if(g, "bond_k", c.grid.bond_k);
    read_if(g, "spatial_k", c.grid.spatial_k);
    read_if(g, "f_gather", c.grid.f_gather);
    read_if(g, "k", c.grid.k);
    read_if(g, "fc_widths", c.grid.fc_widths);
    read_if(g, "learning_rate", c.grid.learning_rate);
    read_if(g, "weight_decay", c.grid.weight_decay);
    read_if(g, "dropout", c.grid.dropout);
  }
  read_if(j, "allow_grid_override", c.allow_grid_override);
  read_if(j, "epochs", c.epochs);
  read_if(j, "batch_size", c.batch_size);
  read_if(j, "cv_folds", c.folds);
  std::string mode = "kfold";
  read_if(j, "cv_mode", mode);
  if (mode == "kfold")
    c.cv_mode = CvMode::kfold;
  else if (mode == "fixed")
    c.cv_mode = CvMode::fixed;
  else
    throw ConfigError("cv_mode must be 'kfold' or 'fixed'");
  read_if(j, "fold_order", c.fold_order);
  read_if(j, "seed", c.seed);
  read_if(j, "chi", c.chi);
  read_if(j, "workers", c.workers);
  read_if(j, "batch_threads", c.batch_threads);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return experiment_config_from_json(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace sgc::inline SGC_PRECISION_TAG
