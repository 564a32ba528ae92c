#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "sgc/error.hpp"
#include "sgc/harness.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

namespace {

template <class T>
const T& pick(const std::vector<T>& values, Rng& rng) {
  return values[rng.below(values.size())];
}

}  // namespace

ModelConfig sample_hyperparameters(const ModelConfig& base, const SearchSpace& grid, Rng& rng) {
  ModelConfig m = base;
  const std::size_t width = pick(grid.stage_widths, rng);
  m.f_bond = width;
  m.f_spatial = width;
  m.bond_k = pick(grid.bond_k, rng);
  m.spatial_k = pick(grid.spatial_k, rng);
  m.f_gather = pick(grid.f_gather, rng);
  m.k = pick(grid.k, rng);
  m.fc_widths = pick(grid.fc_widths, rng);
  m.fc_widths.back() = base.task_count;
  m.learning_rate = pick(grid.learning_rate, rng);
  m.weight_decay = pick(grid.weight_decay, rng);
  m.dropout = pick(grid.dropout, rng);
  return m;
}

std::map<std::string, metrics::Summary> summarize_reports(
    const std::vector<metrics::EvalReport>& reports) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports)
    for (const auto& [name, v] : r.mean)
      if (std::isfinite(v)) values[name].push_back(v);
  std::map<std::string, metrics::Summary> out;
  for (const auto& [name, v] : values) out[name] = metrics::summarize(v);
  return out;
}

SearchResult hyperparameter_search(const ExperimentConfig& config, const Dataset& dev,
                                   const split::FoldAssignment& assignment, std::size_t n_samples,
                                   const std::function<Dataset()>& load_test,
                                   const std::function<void(const std::string&)>& log) {
  if (n_samples == 0) throw ConfigError("hyperparameter search needs at least one sample");
  config.validate();
  std::map<std::string, std::string> dates;
  if (config.fold_order == "temporal") dates = load_dates(config.dates_path);
  const auto plan =
      plan_folds(config, assignment, config.fold_order == "temporal" ? &dates : nullptr);

  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(msg);
  };

  SearchResult result;
  result.table.resize(n_samples);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_samples; i = next++) {
      const std::uint64_t seed = Rng::derive(config.seed, i);
      Rng rng(seed);
      RunRecord rec;
      rec.sample_index = i;
      rec.seed = seed;
      try {
        ModelConfig m = sample_hyperparameters(config.model, config.grid, rng);
        m.seed = seed;
        rec.model = m;
        rec = cross_validate(m, dev, plan, config);
        rec.sample_index = i;
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.mean_score = std::numeric_limits<double>::quiet_NaN();
      }
      say("sample " + std::to_string(i) +
          (rec.failed ? " failed: " + rec.failure
                      : " mean validation score " + std::to_string(rec.mean_score)));
      result.table[i] = std::move(rec);
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, config.workers), n_samples));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  bool found = false;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto& r = result.table[i];
    if (r.failed) continue;
    if (!found || r.mean_score > result.table[result.best].mean_score) {
      result.best = i;
      found = true;
    }
  }
  if (!found) throw NumericError("every hyperparameter sample failed");
  say("selected sample " + std::to_string(result.best));

  // Test labels become visible only from here on.
  const Dataset test = load_test();
  std::vector<std::string> test_ids;
  {
    std::set<std::string> present;
    for (const auto& s : test.samples) present.insert(s.id);
    for (std::size_t i = 0; i < assignment.ids.size(); ++i)
      if (assignment.folds[i] == split::Fold::test && present.count(assignment.ids[i]))
        test_ids.push_back(assignment.ids[i]);
  }
  if (test_ids.empty()) return result;
  const Dataset test_set = test.subset(test_ids);

  std::vector<TrainedFold> trained;
  const RunRecord final_run =
      cross_validate(result.table[result.best].model, dev, plan, config, &trained);
  if (final_run.failed) throw NumericError("final retraining failed: " + final_run.failure);
  for (const auto& f : trained) result.test_reports.push_back(evaluate(*f.model, test_set, config.chi));
  result.test_summary = summarize_reports(result.test_reports);
  return result;
}

nlohmann::json to_json(const SearchResult& r) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& rec : r.table) table.push_back(to_json(rec));
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& rep : r.test_reports) reports.push_back(metrics::to_json(rep));
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [name, s] : r.test_summary)
    summary[name] = {{"median", s.median}, {"stdev", s.stdev},
                     {"text", metrics::format_summary(s)}};
  return {{"best", r.best}, {"table", table}, {"test_reports", reports},
          {"test_summary", summary}};
}

}  // namespace sgc::inline SGC_PRECISION_TAG
