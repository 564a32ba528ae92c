#include "sgc/sgc.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "sgc/error.hpp"
#include "sgc/harness.hpp"

struct sgc_dataset {
  sgc::Dataset data;
};

struct sgc_folds {
  sgc::split::FoldAssignment assignment;
};

struct sgc_model {
  sgc::LoadedModel loaded;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
sgc_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_message(const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(msg.c_str(), g_log_user);
}

sgc_status fail(sgc_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Runs `f`, translating exceptions into status codes.
template <class F>
sgc_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SGC_OK;
  } catch (const sgc::Error& e) {
    return fail(static_cast<sgc_status>(static_cast<int>(e.kind())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SGC_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SGC_ERR_GENERIC, "out of memory");
  } catch (const std::exception& e) {
    return fail(SGC_ERR_GENERIC, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sgc::IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw sgc::IoError("cannot write '" + path + "'");
}

struct FeaturizeOptions {
  sgc::graph::EdgeSchema schema;
  std::vector<std::string> vocab = sgc::chem::ElementVocab::default_vocab().symbols();
  bool strip_hydrogens = false;
  std::string ligand_resname = "LIG";
  double pocket_cutoff = 12.0;
};

FeaturizeOptions parse_options(const char* json_text) {
  FeaturizeOptions o;
  if (!json_text || !*json_text) return o;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw sgc::ConfigError(std::string("invalid options JSON: ") + e.what());
  }
  if (!j.is_object()) throw sgc::ConfigError("options must be a JSON object");
  if (j.contains("schema")) o.schema = sgc::schema_from_json(j.at("schema"));
  if (j.contains("element_vocab"))
    o.vocab = j.at("element_vocab").get<std::vector<std::string>>();
  o.strip_hydrogens = j.value("strip_hydrogens", o.strip_hydrogens);
  o.ligand_resname = j.value("ligand_resname", o.ligand_resname);
  o.pocket_cutoff = j.value("pocket_cutoff", o.pocket_cutoff);
  return o;
}

std::optional<sgc::chem::LabelTable> maybe_labels(const char* path) {
  if (!path) return std::nullopt;
  return sgc::chem::load_labels(read_text(path));
}

sgc::split::Fractions to_fractions(const double f[3]) {
  if (!f) throw sgc::ConfigError("fractions are required");
  sgc::split::Fractions out{f[0], f[1], f[2]};
  sgc::split::validate_fractions(out);
  return out;
}

sgc::split::FoldAssignment cluster_split(const sgc::split::DistanceMatrix& d,
                                         const sgc::split::Fractions& fr, size_t n_clusters,
                                         double threshold, uint64_t seed) {
  const auto merges = sgc::split::ward_linkage(d);
  std::vector<std::size_t> labels;
  if (n_clusters > 0 && threshold >= 0)
    throw sgc::ConfigError("give either a cluster count or a distance threshold, not both");
  if (threshold >= 0) {
    labels = sgc::split::cut_by_threshold(d.size(), merges, threshold);
  } else {
    if (n_clusters == 0)
      n_clusters = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(d.size()))));
    labels = sgc::split::cut_by_count(d.size(), merges, n_clusters);
  }
  return sgc::split::assign_folds(d.ids, labels, fr, seed);
}

sgc::ExperimentConfig experiment(const char* config_path, const char* folds_path,
                                 const uint64_t* seed) {
  if (!config_path) throw sgc::ConfigError("config path is required");
  sgc::ExperimentConfig c = sgc::load_experiment_config(config_path);
  if (folds_path) c.folds_path = folds_path;
  if (seed) c.seed = *seed;
  if (c.data_path.empty()) throw sgc::ConfigError("config lacks a 'data' path");
  if (c.folds_path.empty()) throw sgc::ConfigError("no folds file given");
  return c;
}

std::vector<std::string> ids_in(const sgc::split::FoldAssignment& a, sgc::split::Fold f) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < a.ids.size(); ++i)
    if (a.folds[i] == f) out.push_back(a.ids[i]);
  return out;
}

// The dataset with every test label removed; test labels are only read again
// by explicit evaluation.
sgc::Dataset load_dev(const std::string& path, const sgc::split::FoldAssignment& a) {
  return sgc::load_dataset(path).without_labels(ids_in(a, sgc::split::Fold::test));
}

}  // namespace

extern "C" {

const char* sgc_version(void) { return "1.0.0"; }

const char* sgc_last_error(void) { return g_last_error.c_str(); }

void sgc_string_free(char* s) { std::free(s); }

void sgc_set_log_callback(sgc_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

sgc_status sgc_featurize_sdf(const char* sdf_path, const char* labels_csv_path,
                             const char* options_json, sgc_dataset** out) {
  if (!sdf_path || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const FeaturizeOptions o = parse_options(options_json);
    sgc::chem::ParseOptions po;
    po.strip_hydrogens = o.strip_hydrogens;
    const auto systems = sgc::chem::parse_sdf(read_text(sdf_path), po);
    const auto labels = maybe_labels(labels_csv_path);
    auto ds = std::make_unique<sgc_dataset>();
    ds->data = sgc::build_dataset(systems, labels ? &*labels : nullptr, o.schema, o.vocab);
    *out = ds.release();
  });
}

sgc_status sgc_featurize_pdb(const char* const* pdb_paths, size_t n_paths,
                             const char* labels_csv_path, const char* options_json,
                             sgc_dataset** out) {
  if (!pdb_paths || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const FeaturizeOptions o = parse_options(options_json);
    sgc::chem::ParseOptions po;
    po.strip_hydrogens = o.strip_hydrogens;
    std::vector<sgc::chem::MolecularSystem> systems;
    for (size_t i = 0; i < n_paths; ++i) {
      if (!pdb_paths[i]) throw sgc::ConfigError("null PDB path");
      try {
        auto sys = sgc::chem::parse_pdb(read_text(pdb_paths[i]), o.ligand_resname, po);
        if (o.pocket_cutoff > 0) sys = sgc::chem::crop_pocket(sys, o.pocket_cutoff);
        sys.sample_id = std::filesystem::path(pdb_paths[i]).stem().string();
        systems.push_back(std::move(sys));
      } catch (const sgc::Error& e) {
        throw sgc::Error(e.kind(), std::string(pdb_paths[i]) + ": " + e.what());
      }
    }
    const auto labels = maybe_labels(labels_csv_path);
    auto ds = std::make_unique<sgc_dataset>();
    ds->data = sgc::build_dataset(systems, labels ? &*labels : nullptr, o.schema, o.vocab);
    *out = ds.release();
  });
}

sgc_status sgc_dataset_load(const char* path, sgc_dataset** out) {
  if (!path || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    auto ds = std::make_unique<sgc_dataset>();
    ds->data = sgc::load_dataset(path);
    *out = ds.release();
  });
}

sgc_status sgc_dataset_save(const sgc_dataset* ds, const char* path) {
  if (!ds || !path) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] { sgc::save_dataset(path, ds->data); });
}

size_t sgc_dataset_size(const sgc_dataset* ds) { return ds ? ds->data.samples.size() : 0; }

size_t sgc_dataset_task_count(const sgc_dataset* ds) { return ds ? ds->data.task_count() : 0; }

const char* sgc_dataset_id(const sgc_dataset* ds, size_t index) {
  if (!ds || index >= ds->data.samples.size()) return nullptr;
  return ds->data.samples[index].id.c_str();
}

void sgc_dataset_free(sgc_dataset* ds) { delete ds; }

sgc_status sgc_split_random(const sgc_dataset* ds, const double fractions[3], uint64_t seed,
                            sgc_folds** out) {
  if (!ds || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    std::vector<std::string> ids;
    for (const auto& s : ds->data.samples) ids.push_back(s.id);
    auto f = std::make_unique<sgc_folds>();
    f->assignment = sgc::split::random_split(ids, to_fractions(fractions), seed);
    *out = f.release();
  });
}

sgc_status sgc_split_agglomerative_matrix(const char* matrix_csv_path, const double fractions[3],
                                          size_t n_clusters, double threshold, uint64_t seed,
                                          sgc_folds** out) {
  if (!matrix_csv_path || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto fr = to_fractions(fractions);
    const auto d = sgc::split::parse_distance_matrix(read_text(matrix_csv_path));
    auto f = std::make_unique<sgc_folds>();
    f->assignment = cluster_split(d, fr, n_clusters, threshold, seed);
    *out = f.release();
  });
}

sgc_status sgc_split_agglomerative_sequences(const char* sequences_csv_path,
                                             const double fractions[3], size_t n_clusters,
                                             double threshold, uint64_t seed, sgc_folds** out) {
  if (!sequences_csv_path || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto fr = to_fractions(fractions);
    std::vector<std::size_t> lines;
    const auto rows = sgc::chem::read_csv(read_text(sequences_csv_path), &lines);
    if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "sample_id" ||
        rows[0][1] != "sequence")
      throw sgc::ParseError("sequence file header must be 'sample_id,sequence'", 1);
    std::vector<std::string> ids, seqs;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 2) throw sgc::ParseError("expected 2 fields", lines[r]);
      ids.push_back(rows[r][0]);
      seqs.push_back(rows[r][1]);
    }
    const auto d = sgc::split::sequence_distance_matrix(ids, seqs);
    auto f = std::make_unique<sgc_folds>();
    f->assignment = cluster_split(d, fr, n_clusters, threshold, seed);
    *out = f.release();
  });
}

sgc_status sgc_folds_load(const char* path, sgc_folds** out) {
  if (!path || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    auto f = std::make_unique<sgc_folds>();
    f->assignment = sgc::split::parse_folds_csv(read_text(path));
    *out = f.release();
  });
}

sgc_status sgc_folds_save(const sgc_folds* folds, const char* path) {
  if (!folds || !path) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] { write_text(path, sgc::split::write_folds_csv(folds->assignment)); });
}

size_t sgc_folds_size(const sgc_folds* folds) { return folds ? folds->assignment.ids.size() : 0; }

size_t sgc_folds_count(const sgc_folds* folds, sgc_fold fold) {
  if (!folds || fold < SGC_FOLD_TRAIN || fold > SGC_FOLD_TEST) return 0;
  return folds->assignment.count(static_cast<sgc::split::Fold>(fold));
}

sgc_status sgc_folds_summary_json(const sgc_folds* folds, char** out) {
  if (!folds || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto& a = folds->assignment;
    const nlohmann::json j{{"method", a.method},
                           {"target", a.target},
                           {"achieved", a.achieved},
                           {"counts",
                            {a.count(sgc::split::Fold::train), a.count(sgc::split::Fold::valid),
                             a.count(sgc::split::Fold::test)}},
                           {"cluster_count", a.cluster_count},
                           {"warnings", a.warnings}};
    *out = dup_string(j.dump());
  });
}

void sgc_folds_free(sgc_folds* folds) { delete folds; }

sgc_status sgc_train(const char* config_path, const char* folds_path, const uint64_t* seed,
                     char** result_json) {
  if (!result_json) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto config = experiment(config_path, folds_path, seed);
    const auto assignment = sgc::split::parse_folds_csv(read_text(config.folds_path));
    const sgc::Dataset dev = load_dev(config.data_path, assignment);
    std::map<std::string, std::string> dates;
    if (config.fold_order == "temporal") dates = sgc::load_dates(config.dates_path);
    const auto plan = sgc::plan_folds(config, assignment,
                                      config.fold_order == "temporal" ? &dates : nullptr);
    sgc::ModelConfig model = config.model;
    model.seed = config.seed;
    std::vector<sgc::TrainedFold> trained;
    const sgc::RunRecord rec = sgc::cross_validate(model, dev, plan, config, &trained);

    nlohmann::json j = sgc::to_json(rec);
    nlohmann::json checkpoints = nlohmann::json::array();
    if (!config.output_dir.empty()) {
      std::filesystem::create_directories(config.output_dir);
      for (std::size_t k = 0; k < trained.size(); ++k) {
        const auto path = (std::filesystem::path(config.output_dir) /
                           ("model_fold" + std::to_string(k) + ".sgck"))
                              .string();
        sgc::save_model(path, *trained[k].model, dev.task_names);
        checkpoints.push_back(path);
      }
      write_text((std::filesystem::path(config.output_dir) / "run.json").string(),
                 j.dump(2) + "\n");
    }
    nlohmann::json histories = nlohmann::json::array();
    for (const auto& t : trained) {
      nlohmann::json h = nlohmann::json::array();
      for (const auto& e : t.result.history)
        h.push_back({{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"valid_score", std::isfinite(e.valid_score) ? nlohmann::json(e.valid_score)
                                                                  : nlohmann::json()}});
      histories.push_back(h);
    }
    j["history"] = histories;
    j["checkpoints"] = checkpoints;
    if (rec.failed) throw sgc::NumericError("training failed: " + rec.failure);
    *result_json = dup_string(j.dump());
  });
}

sgc_status sgc_hpsearch(const char* config_path, const char* folds_path, size_t n_samples,
                        const uint64_t* seed, char** result_json) {
  if (!result_json) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto config = experiment(config_path, folds_path, seed);
    const auto assignment = sgc::split::parse_folds_csv(read_text(config.folds_path));
    const sgc::Dataset dev = load_dev(config.data_path, assignment);
    const auto load_test = [&] {
      return sgc::load_dataset(config.data_path).subset(ids_in(assignment, sgc::split::Fold::test));
    };
    const auto result =
        sgc::hyperparameter_search(config, dev, assignment, n_samples, load_test, log_message);
    const nlohmann::json j = sgc::to_json(result);
    if (!config.output_dir.empty()) {
      std::filesystem::create_directories(config.output_dir);
      write_text((std::filesystem::path(config.output_dir) / "search.json").string(),
                 j.dump(2) + "\n");
    }
    *result_json = dup_string(j.dump());
  });
}

sgc_status sgc_model_load(const char* checkpoint_path, sgc_model** out) {
  if (!checkpoint_path || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    auto m = std::make_unique<sgc_model>();
    m->loaded = sgc::load_model(checkpoint_path);
    *out = m.release();
  });
}

size_t sgc_model_task_count(const sgc_model* model) {
  return model ? model->loaded.model->config().task_count : 0;
}

sgc_status sgc_model_predict(const sgc_model* model, const sgc_dataset* ds, double* out,
                             size_t capacity) {
  if (!model || !ds || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto& net = *model->loaded.model;
    const std::size_t need = ds->data.samples.size() * net.config().task_count;
    if (capacity < need)
      throw sgc::ConfigError("output buffer holds " + std::to_string(capacity) + " values, " +
                             std::to_string(need) + " needed");
    for (const auto& s : ds->data.samples) net.check_compatible(s.graph);
    const sgc::Tensor pred = sgc::predict_batch(net, ds->data.samples);
    for (std::size_t i = 0; i < need; ++i) out[i] = static_cast<double>(pred[i]);
  });
}

sgc_status sgc_evaluate(const sgc_model* model, const sgc_dataset* ds, double chi,
                        const sgc_folds* folds, sgc_fold fold, char** report_json,
                        char** report_table) {
  if (!model || !ds) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const sgc::Dataset data =
        folds ? ds->data.subset(ids_in(folds->assignment, static_cast<sgc::split::Fold>(fold)))
              : ds->data;
    const auto report = sgc::evaluate(*model->loaded.model, data, chi);
    if (report_json) *report_json = dup_string(sgc::metrics::to_json(report).dump());
    if (report_table) *report_table = dup_string(sgc::metrics::format_table(report));
  });
}

void sgc_model_free(sgc_model* model) { delete model; }

sgc_status sgc_ef_chi(const double* y, const double* y_hat, size_t n, double chi, double* out) {
  if ((!y || !y_hat) && n > 0) return fail(SGC_ERR_ARGUMENT, "null argument");
  if (!out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = sgc::metrics::ef_chi_regression(std::span<const double>(y, n),
                                           std::span<const double>(y_hat, n), chi);
  });
}

sgc_status sgc_sequence_identity(const char* a, const char* b, double* out) {
  if (!a || !b || !out) return fail(SGC_ERR_ARGUMENT, "null argument");
  return guard([&] { *out = sgc::split::sequence_identity(a, b); });
}

}  // extern "C"
