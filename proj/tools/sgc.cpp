// Command-line front end over the C API.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgc/sgc.h"

namespace {

int report(sgc_status status) {
  if (status != SGC_OK) std::cerr << "sgc: " << sgc_last_error() << "\n";
  return status == SGC_ERR_ARGUMENT ? SGC_ERR_CONFIG : static_cast<int>(status);
}

// SGC_SEED takes precedence over seeds from flags or configs.
std::optional<uint64_t> env_seed() {
  const char* s = std::getenv("SGC_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') {
    std::cerr << "sgc: ignoring non-numeric SGC_SEED '" << s << "'\n";
    return std::nullopt;
  }
  return v;
}

bool parse_fractions(const std::string& text, double out[3]) {
  std::stringstream in(text);
  std::string item;
  int k = 0;
  while (std::getline(in, item, ',')) {
    if (k == 3) return false;
    try {
      std::size_t used = 0;
      out[k] = std::stod(item, &used);
      if (used != item.size()) return false;
    } catch (const std::exception&) {
      return false;
    }
    ++k;
  }
  return k == 3;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_log(const char* message, void*) { std::cerr << message << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial graph convolutions for molecular property and binding affinity prediction"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print training progress to stderr");

  // featurize
  auto* feat = app.add_subcommand("featurize", "Parse structures into a dataset bundle");
  std::string sdf_path, labels_path, feat_out, options_path, ligand_resname = "LIG";
  std::vector<std::string> pdb_paths;
  bool strip_h = false;
  double pocket_cutoff = 12.0;
  auto* sdf_opt = feat->add_option("--sdf", sdf_path, "V2000 SDF file of ligands")->check(CLI::ExistingFile);
  auto* pdb_opt = feat->add_option("--pdb", pdb_paths, "PDB complexes, one per file")->check(CLI::ExistingFile);
  sdf_opt->excludes(pdb_opt);
  feat->add_option("--labels", labels_path, "CSV with header id,<task>...")->check(CLI::ExistingFile);
  feat->add_option("--out", feat_out, "Output dataset bundle")->required();
  feat->add_option("--options", options_path, "JSON with schema and element_vocab")->check(CLI::ExistingFile);
  feat->add_option("--ligand-resname", ligand_resname, "Residue name of the ligand in PDB input");
  feat->add_option("--pocket-cutoff", pocket_cutoff, "Drop protein atoms farther than this (Angstrom); 0 keeps all");
  feat->add_flag("--strip-hydrogens", strip_h, "Remove explicit hydrogens");

  // split
  auto* split = app.add_subcommand("split", "Assign samples to train/valid/test folds");
  std::string method = "random", split_out, fractions_text = "0.75,0.17,0.08", data_for_split,
              sequences_path;
  std::vector<std::string> distance;
  std::size_t n_clusters = 0;
  double threshold = -1.0;
  uint64_t split_seed = 0;
  split->add_option("--method", method, "random or agglomerative")
      ->check(CLI::IsMember({"random", "agglomerative"}));
  split->add_option("--distance", distance, "computed-sequence | matrix FILE")->expected(1, 2);
  split->add_option("--sequences", sequences_path, "CSV sample_id,sequence for computed-sequence")
      ->check(CLI::ExistingFile);
  split->add_option("--data", data_for_split, "Dataset bundle whose ids are split (random)")
      ->check(CLI::ExistingFile);
  split->add_option("--fractions", fractions_text, "train,valid,test");
  split->add_option("--clusters", n_clusters, "Cut the dendrogram into this many clusters");
  split->add_option("--threshold", threshold, "Cut the dendrogram at this Ward height");
  split->add_option("--seed", split_seed, "Random seed");
  split->add_option("--out", split_out, "Output CSV sample_id,fold")->required();

  // train
  auto* train = app.add_subcommand("train", "Cross-validated training of one configuration");
  std::string train_config, train_folds;
  train->add_option("--config", train_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--folds", train_folds, "Fold CSV (overrides the config)")->check(CLI::ExistingFile);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  std::string checkpoint, eval_data, eval_folds, eval_fold = "test", eval_json;
  double chi = 0.05;
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "Dataset bundle")->required()->check(CLI::ExistingFile);
  eval->add_option("--chi", chi, "Enrichment fraction in (0, 1]");
  eval->add_option("--folds", eval_folds, "Restrict to one fold of this CSV")->check(CLI::ExistingFile);
  eval->add_option("--fold", eval_fold, "Fold used with --folds")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("--json", eval_json, "Also write the report as JSON here");

  // hpsearch
  auto* hp = app.add_subcommand("hpsearch", "Random hyperparameter search with K-fold selection");
  std::string hp_config, hp_folds;
  std::size_t hp_n = 100;
  hp->add_option("--config", hp_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  hp->add_option("--folds", hp_folds, "Fold CSV (overrides the config)")->check(CLI::ExistingFile);
  hp->add_option("--n", hp_n, "Number of hyperparameter samples")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : SGC_ERR_CONFIG;
  }
  if (verbose) sgc_set_log_callback(print_log, nullptr);
  const auto seed = env_seed();

  if (*feat) {
    if (sdf_path.empty() && pdb_paths.empty()) {
      std::cerr << "sgc: featurize needs --sdf or --pdb\n";
      return SGC_ERR_CONFIG;
    }
    nlohmann::json options = nlohmann::json::object();
    if (!options_path.empty()) {
      try {
        options = nlohmann::json::parse(read_file(options_path));
      } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "sgc: " << options_path << ": " << e.what() << "\n";
        return SGC_ERR_PARSE;
      }
      if (!options.is_object()) {
        std::cerr << "sgc: options file is not a JSON object\n";
        return SGC_ERR_CONFIG;
      }
    }
    options["strip_hydrogens"] = strip_h;
    options["pocket_cutoff"] = pocket_cutoff;
    options["ligand_resname"] = ligand_resname;
    const std::string options_text = options.dump();
    sgc_dataset* ds = nullptr;
    const char* labels = labels_path.empty() ? nullptr : labels_path.c_str();
    sgc_status st;
    if (!sdf_path.empty()) {
      st = sgc_featurize_sdf(sdf_path.c_str(), labels, options_text.c_str(), &ds);
    } else {
      std::vector<const char*> paths;
      for (const auto& p : pdb_paths) paths.push_back(p.c_str());
      st = sgc_featurize_pdb(paths.data(), paths.size(), labels, options_text.c_str(), &ds);
    }
    if (st == SGC_OK) st = sgc_dataset_save(ds, feat_out.c_str());
    if (st == SGC_OK)
      std::cout << "wrote " << sgc_dataset_size(ds) << " samples with "
                << sgc_dataset_task_count(ds) << " tasks to " << feat_out << "\n";
    sgc_dataset_free(ds);
    return report(st);
  }

  if (*split) {
    double fractions[3];
    if (!parse_fractions(fractions_text, fractions)) {
      std::cerr << "sgc: --fractions expects three comma-separated numbers\n";
      return SGC_ERR_CONFIG;
    }
    const uint64_t s = seed.value_or(split_seed);
    sgc_folds* folds = nullptr;
    sgc_status st;
    if (method == "random") {
      if (data_for_split.empty()) {
        std::cerr << "sgc: random split needs --data\n";
        return SGC_ERR_CONFIG;
      }
      sgc_dataset* ds = nullptr;
      st = sgc_dataset_load(data_for_split.c_str(), &ds);
      if (st == SGC_OK) st = sgc_split_random(ds, fractions, s, &folds);
      sgc_dataset_free(ds);
    } else if (distance.size() == 2 && distance[0] == "matrix") {
      st = sgc_split_agglomerative_matrix(distance[1].c_str(), fractions, n_clusters, threshold, s,
                                          &folds);
    } else if (distance.size() == 1 && distance[0] == "computed-sequence") {
      if (sequences_path.empty()) {
        std::cerr << "sgc: --distance computed-sequence needs --sequences\n";
        return SGC_ERR_CONFIG;
      }
      st = sgc_split_agglomerative_sequences(sequences_path.c_str(), fractions, n_clusters,
                                             threshold, s, &folds);
    } else {
      std::cerr << "sgc: agglomerative split needs --distance computed-sequence or --distance matrix FILE\n";
      return SGC_ERR_CONFIG;
    }
    if (st == SGC_OK) st = sgc_folds_save(folds, split_out.c_str());
    if (st == SGC_OK) {
      char* summary = nullptr;
      st = sgc_folds_summary_json(folds, &summary);
      if (st == SGC_OK) std::cout << summary << "\n";
      sgc_string_free(summary);
    }
    sgc_folds_free(folds);
    return report(st);
  }

  const uint64_t* seed_ptr = seed ? &*seed : nullptr;

  if (*train) {
    char* result = nullptr;
    const sgc_status st = sgc_train(train_config.c_str(),
                                    train_folds.empty() ? nullptr : train_folds.c_str(), seed_ptr,
                                    &result);
    if (st == SGC_OK) std::cout << result << "\n";
    sgc_string_free(result);
    return report(st);
  }

  if (*eval) {
    sgc_model* model = nullptr;
    sgc_dataset* ds = nullptr;
    sgc_folds* folds = nullptr;
    char* json = nullptr;
    char* table = nullptr;
    sgc_status st = sgc_model_load(checkpoint.c_str(), &model);
    if (st == SGC_OK) st = sgc_dataset_load(eval_data.c_str(), &ds);
    if (st == SGC_OK && !eval_folds.empty()) st = sgc_folds_load(eval_folds.c_str(), &folds);
    const sgc_fold fold = eval_fold == "train"   ? SGC_FOLD_TRAIN
                          : eval_fold == "valid" ? SGC_FOLD_VALID
                                                 : SGC_FOLD_TEST;
    if (st == SGC_OK) st = sgc_evaluate(model, ds, chi, folds, fold, &json, &table);
    if (st == SGC_OK) {
      std::cout << table;
      if (!eval_json.empty()) {
        std::ofstream out(eval_json);
        out << json << "\n";
        if (!out) {
          std::cerr << "sgc: cannot write " << eval_json << "\n";
          st = SGC_ERR_IO;
        }
      }
    }
    sgc_string_free(json);
    sgc_string_free(table);
    sgc_folds_free(folds);
    sgc_dataset_free(ds);
    sgc_model_free(model);
    return report(st);
  }

  if (*hp) {
    char* result = nullptr;
    const sgc_status st = sgc_hpsearch(hp_config.c_str(), hp_folds.empty() ? nullptr : hp_folds.c_str(),
                                       hp_n, seed_ptr, &result);
    if (st == SGC_OK) std::cout << result << "\n";
    sgc_string_free(result);
    return report(st);
  }
  return 0;
}
