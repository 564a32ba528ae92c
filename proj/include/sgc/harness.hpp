#pragma once

// Dataset bundles, the training loop, K-fold cross-validation, random
// hyperparameter search and held-out evaluation.

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sgc/cvsplit.hpp"
#include "sgc/metrics.hpp"
#include "sgc/potentialnet.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

// ---------------------------------------------------------------------------
// Dataset bundle

struct Dataset {
  std::vector<std::string> task_names;
  graph::EdgeSchema schema;
  std::vector<std::string> element_vocab;
  std::vector<Sample> samples;

  std::size_t task_count() const { return task_names.size(); }
  /// Throws ConfigError for an unknown id.
  std::size_t index_of(const std::string& id) const;
  /// Samples with the given ids, in the order given.
  Dataset subset(const std::vector<std::string>& ids) const;
  /// Copy whose labels for `ids` are all absent.
  Dataset without_labels(const std::vector<std::string>& ids) const;
};

/// Featurizes systems. Label rows are looked up by sample id; systems
/// without a row get all-absent labels. `labels` may be null.
Dataset build_dataset(const std::vector<chem::MolecularSystem>& systems,
                      const chem::LabelTable* labels, const graph::EdgeSchema& schema,
                      const std::vector<std::string>& element_vocab);

/// "SGDS", u32 version, u32 metadata length + JSON (tasks, schema,
/// element_vocab), u32 count, then per sample u32 id length + id, T float64
/// labels (NaN = absent) and one graph record.
void write_dataset(std::ostream& out, const Dataset& d);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// Experiment configuration

/// Candidate values for the random search. Fully connected widths list the
/// hidden layers followed by an output width that is replaced by the task
/// count.
struct SearchSpace {
  std::vector<std::size_t> stage_widths{64, 128};  // f_bond = f_spatial
  std::vector<std::size_t> bond_k{1, 2};
  std::vector<std::size_t> spatial_k{1, 2, 3};
  std::vector<std::size_t> f_gather{64, 128};
  std::vector<std::size_t> k{1, 2, 3};
  std::vector<std::vector<std::size_t>> fc_widths{{128, 32, 1}, {128, 1}, {64, 32, 1}, {64, 1}};
  std::vector<double> learning_rate{1e-3, 2e-4};
  std::vector<double> weight_decay{0.0, 1e-7, 1e-5, 1e-3};
  std::vector<double> dropout{0.0, 0.25, 0.4, 0.5};

  /// Throws ConfigError when a value falls outside the default domains.
  void check_within_defaults() const;
};

enum class CvMode {
  kfold,  // K folds over the train and valid samples of the assignment
  fixed   // train fold vs valid fold, K initializations
};

struct ExperimentConfig {
  std::string data_path;
  std::string folds_path;
  ModelConfig model;
  SearchSpace grid;
  bool allow_grid_override = false;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::size_t folds = 3;  // K
  CvMode cv_mode = CvMode::kfold;
  std::string fold_order = "random";  // or "temporal"
  std::string dates_path;             // CSV sample_id,date for temporal order
  std::uint64_t seed = 0;
  double chi = 0.05;
  unsigned workers = 1;        // concurrent hyperparameter samples
  unsigned batch_threads = 1;  // workers within one minibatch
  std::string output_dir;

  /// Throws ConfigError on invalid settings.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Relative paths are resolved against `base_dir` when it is nonempty.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;  // shuffling and dropout
  /// Workers sharing each minibatch. Gradients are summed in worker order,
  /// so results are bit-identical for a fixed thread count.
  unsigned threads = 1;
  std::function<void(const std::string&)> log;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_score = 0.0;
};

struct TrainResult {
  bool failed = false;
  std::string failure;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  std::vector<EpochRecord> history;
};

/// Validation Pearson (regression) or ROC-AUC (classification), averaged over
/// tasks with computable values; NaN when none is computable.
double validation_score(const PotentialNetModel& model, std::span<const Sample> samples);

/// Shuffled minibatches with gradients summed over each batch. Dropout draws
/// come from a per-sample stream, independent of `threads`. After every
/// epoch the validation score is computed and the best epoch's parameters are
/// restored at the end. A non-finite loss stops the run and marks it failed.
TrainResult train_model(PotentialNetModel& model, std::span<const Sample> train,
                        std::span<const Sample> valid, const TrainOptions& options);

/// Mean squared error of eval-mode predictions over present labels.
double mean_squared_error(const PotentialNetModel& model, std::span<const Sample> samples);

// ---------------------------------------------------------------------------
// Cross-validation

/// Disjoint, exhaustive K-way partition of `ids`. Random order shuffles with
/// `seed`; temporal order sorts by date (then id) and cuts contiguous blocks.
std::vector<std::vector<std::string>> kfold_partition(
    const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed,
    const std::map<std::string, std::string>* dates = nullptr);

std::map<std::string, std::string> load_dates(const std::string& path);

struct FoldRun {
  std::vector<std::string> train_ids;
  std::vector<std::string> valid_ids;
  std::uint64_t seed = 0;
};

/// The K training runs of one configuration. Test samples never appear.
std::vector<FoldRun> plan_folds(const ExperimentConfig& config,
                                const split::FoldAssignment& assignment,
                                const std::map<std::string, std::string>* dates = nullptr);

struct RunRecord {
  std::size_t sample_index = 0;
  ModelConfig model;
  std::uint64_t seed = 0;
  std::vector<double> fold_scores;   // best-epoch validation score per fold
  std::vector<std::size_t> best_epochs;
  double mean_score = 0.0;
  bool failed = false;
  std::string failure;
};

nlohmann::json to_json(const RunRecord& r);

struct TrainedFold {
  TrainResult result;
  std::shared_ptr<PotentialNetModel> model;
};

/// Trains one configuration on every planned fold. `dev` must not carry
/// test labels.
RunRecord cross_validate(const ModelConfig& model, const Dataset& dev,
                         const std::vector<FoldRun>& plan, const ExperimentConfig& config,
                         std::vector<TrainedFold>* trained = nullptr);

/// Uniform draw from the grid; the last fully connected width becomes the
/// task count of `base`.
ModelConfig sample_hyperparameters(const ModelConfig& base, const SearchSpace& grid, Rng& rng);

struct SearchResult {
  std::vector<RunRecord> table;  // in sample order
  std::size_t best = 0;
  std::vector<metrics::EvalReport> test_reports;  // one per fold of the final run
  std::map<std::string, metrics::Summary> test_summary;  // per metric, task mean
};

nlohmann::json to_json(const SearchResult& r);

/// Random search. Sample i uses seed Rng::derive(config.seed, i), so results
/// do not depend on `config.workers`. Selection maximizes the mean validation
/// score, ties going to the lowest sample index. Only after selection is
/// `load_test` called; the selected configuration is then retrained on all K
/// folds and each fold's model is evaluated on the returned test set.
/// Throws NumericError when every run failed.
SearchResult hyperparameter_search(const ExperimentConfig& config, const Dataset& dev,
                                   const split::FoldAssignment& assignment, std::size_t n_samples,
                                   const std::function<Dataset()>& load_test,
                                   const std::function<void(const std::string&)>& log = {});

/// Median and population stdev of each metric across reports (task means).
std::map<std::string, metrics::Summary> summarize_reports(
    const std::vector<metrics::EvalReport>& reports);

// ---------------------------------------------------------------------------
// Evaluation

/// Checkpoint metadata: {"model": ModelConfig, "task_names": [...]}.
void save_model(const std::string& path, const PotentialNetModel& model,
                const std::vector<std::string>& task_names);
struct LoadedModel {
  std::shared_ptr<PotentialNetModel> model;
  std::vector<std::string> task_names;
};
LoadedModel load_model(const std::string& path);
std::string checkpoint_bytes(const PotentialNetModel& model,
                             const std::vector<std::string>& task_names);

/// Throws ShapeError "schema mismatch ..." when the dataset was built with a
/// different edge schema, vocabulary or task count.
void check_dataset_compatible(const PotentialNetModel& model, const Dataset& data);

/// Full metric suite over samples with labels.
metrics::EvalReport evaluate(const PotentialNetModel& model, const Dataset& data, double chi);

}  // namespace sgc::inline SGC_PRECISION_TAG
