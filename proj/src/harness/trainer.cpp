#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "sgc/error.hpp"
#include "sgc/harness.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-task (observed, predicted) pairs over present labels.
void task_pairs(std::span<const Sample> samples, const Tensor& pred, std::size_t t,
                std::vector<double>& y, std::vector<double>& p) {
  y.clear();
  p.clear();
  for (std::size_t s = 0; s < samples.size(); ++s)
    if (t < samples[s].labels.size() && samples[s].labels[t]) {
      y.push_back(*samples[s].labels[t]);
      p.push_back(static_cast<double>(pred(s, t)));
    }
}

std::vector<Tensor> snapshot(const ParameterSet& params) {
  std::vector<Tensor> out;
  for (const auto& p : params.items()) out.push_back(p.var.value());
  return out;
}

void restore(ParameterSet& params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    params.items()[i].var.shared()->value = values[i];
}

bool has_label(const Sample& s) {
  return std::any_of(s.labels.begin(), s.labels.end(), [](const auto& v) { return v.has_value(); });
}

}  // namespace

double validation_score(const PotentialNetModel& model, std::span<const Sample> samples) {
  const Tensor pred = predict_batch(model, samples);
  if (!pred.all_finite()) throw NumericError("non-finite validation predictions");
  const bool regression = model.config().task_kind == TaskKind::regression;
  std::vector<double> y, p;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < model.config().task_count; ++t) {
    task_pairs(samples, pred, t, y, p);
    try {
      sum += regression ? metrics::pearson(y, p) : metrics::roc_auc(y, p);
      ++count;
    } catch (const Error&) {
      // Undefined for this task on this data.
    }
  }
  return count ? sum / static_cast<double>(count) : kNaN;
}

double mean_squared_error(const PotentialNetModel& model, std::span<const Sample> samples) {
  const Tensor pred = predict_batch(model, samples);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t t = 0; t < samples[i].labels.size(); ++t)
      if (samples[i].labels[t]) {
        const double d = static_cast<double>(pred(i, t)) - *samples[i].labels[t];
        s += d * d;
        ++count;
      }
  if (!count) throw NumericError("mean squared error undefined: no labels present");
  return s / static_cast<double>(count);
}

TrainResult train_model(PotentialNetModel& model, std::span<const Sample> train,
                        std::span<const Sample> valid, const TrainOptions& options) {
  if (train.empty()) throw ConfigError("training set is empty");
  if (valid.empty()) throw ConfigError("validation set is empty");
  if (options.epochs == 0 || options.batch_size == 0)
    throw ConfigError("epochs and batch_size must be positive");
  for (const auto& s : train) model.check_compatible(s.graph);
  for (const auto& s : valid) model.check_compatible(s.graph);

  const ModelConfig& cfg = model.config();
  ParameterSet& params = model.parameters();
  OptimizerConfig oc;
  oc.learning_rate = cfg.learning_rate;
  oc.weight_decay = cfg.weight_decay;
  Optimizer optimizer(oc);
  Rng shuffle_rng(Rng::derive(options.seed, 0));

  // Replica 0 is the model itself; others receive its values every batch.
  const unsigned threads = std::max(1u, options.threads);
  std::vector<std::unique_ptr<PotentialNetModel>> replicas;
  for (unsigned w = 1; w < threads; ++w) replicas.push_back(std::make_unique<PotentialNetModel>(cfg));
  auto replica = [&](unsigned w) -> PotentialNetModel& { return w == 0 ? model : *replicas[w - 1]; };

  TrainResult result;
  std::vector<Tensor> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto fail = [&](std::size_t epoch, const std::string& why) {
    result.failed = true;
    result.failure = "epoch " + std::to_string(epoch) + ": " + why;
    if (options.log) options.log("run failed, " + result.failure);
    if (!best.empty()) restore(params, best);
    return result;
  };

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    const std::uint64_t epoch_seed = Rng::derive(Rng::derive(options.seed, 1), epoch);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      std::vector<const std::vector<std::optional<double>>*> labels;
      bool any = false;
      for (std::size_t q = start; q < stop; ++q) {
        labels.push_back(&train[order[q]].labels);
        any = any || has_label(train[order[q]]);
      }
      if (!any) continue;
      const auto weights = loss_weights(labels, cfg.task_count, cfg.task_kind);

      const unsigned active = static_cast<unsigned>(std::min<std::size_t>(threads, stop - start));
      std::vector<double> chunk_loss(active, 0.0);
      std::vector<std::exception_ptr> errors(active);
      auto run_chunk = [&](unsigned w) {
        try {
          PotentialNetModel& m = replica(w);
          m.parameters().zero_grad();
          const std::size_t n = stop - start;
          for (std::size_t q = start + w * n / active; q < start + (w + 1) * n / active; ++q) {
            const Sample& s = train[order[q]];
            if (!has_label(s)) continue;
            Rng dropout_rng(Rng::derive(epoch_seed, order[q]));
            ad::Var pred = m.forward(s.graph, true, dropout_rng);
            ad::Var l = weighted_loss(pred, s.labels, weights[q - start], cfg.task_kind);
            chunk_loss[w] += static_cast<double>(l.value()[0]);
            ad::backward(l);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      };
      if (active == 1) {
        run_chunk(0);
      } else {
        for (unsigned w = 1; w < active; ++w) {
          auto& dst = replicas[w - 1]->parameters().items();
          for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i].var.shared()->value = params.items()[i].var.value();
        }
        std::vector<std::thread> pool;
        for (unsigned w = 1; w < active; ++w) pool.emplace_back(run_chunk, w);
        run_chunk(0);
        for (auto& t : pool) t.join();
      }
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
      double batch_loss = 0.0;
      for (unsigned w = 0; w < active; ++w) batch_loss += chunk_loss[w];
      for (unsigned w = 1; w < active; ++w) {
        const auto& src = replicas[w - 1]->parameters().items();
        for (std::size_t i = 0; i < src.size(); ++i) {
          if (src[i].var.node()->grad.empty()) continue;
          Tensor& g = params.items()[i].var.node()->grad_buffer();
          const Tensor& add = src[i].var.node()->grad;
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += add[k];
        }
      }
      if (!std::isfinite(batch_loss)) return fail(epoch, "non-finite training loss");
      optimizer.step(params);
      epoch_loss += batch_loss;
      ++batches;
    }
    if (batches == 0) throw NumericError("loss undefined: every training label is absent");

    double score;
    try {
      score = validation_score(model, valid);
    } catch (const NumericError& e) {
      return fail(epoch, e.what());
    }
    result.history.push_back({epoch, epoch_loss / static_cast<double>(batches), score});
    const double ranked = std::isnan(score) ? -std::numeric_limits<double>::infinity() : score;
    if (best.empty() || ranked > best_score) {
      best_score = ranked;
      best = snapshot(params);
      result.best_epoch = epoch;
      result.best_score = score;
    }
    if (options.log) {
      std::ostringstream msg;
      msg << "epoch " << epoch << " loss " << result.history.back().train_loss << " valid "
          << score;
      options.log(msg.str());
    }
  }
  restore(params, best);
  return result;
}

std::vector<std::vector<std::string>> kfold_partition(
    const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed,
    const std::map<std::string, std::string>* dates) {
  if (k == 0) throw ConfigError("K must be positive");
  if (ids.size() < k)
    throw ConfigError("cannot split " + std::to_string(ids.size()) + " samples into " +
                      std::to_string(k) + " folds");
  std::vector<std::string> order = ids;
  if (dates) {
    for (const auto& id : order)
      if (!dates->count(id)) throw ConfigError("no date for sample '" + id + "'");
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      const auto& da = dates->at(a);
      const auto& db = dates->at(b);
      return da != db ? da < db : a < b;
    });
  } else {
    Rng rng(seed);
    rng.shuffle(order);
  }
  std::vector<std::vector<std::string>> parts(k);
  const std::size_t n = order.size();
  for (std::size_t f = 0; f < k; ++f)
    parts[f].assign(order.begin() + static_cast<std::ptrdiff_t>(f * n / k),
                    order.begin() + static_cast<std::ptrdiff_t>((f + 1) * n / k));
  return parts;
}

std::map<std::string, std::string> load_dates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dates file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<std::size_t> lines;
  const auto rows = chem::read_csv(ss.str(), &lines);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "sample_id")
    throw ParseError("dates header must be 'sample_id,date'", 1);
  std::map<std::string, std::string> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw ParseError("expected 2 fields", lines[r]);
    const std::string& d = rows[r][1];
    const bool iso = d.size() == 10 && d[4] == '-' && d[7] == '-' &&
                     std::all_of(d.begin(), d.end(), [](char c) {
                       return c == '-' || (c >= '0' && c <= '9');
                     });
    if (!iso) throw ParseError("date '" + d + "' is not YYYY-MM-DD", lines[r]);
    if (!out.emplace(rows[r][0], d).second)
      throw ParseError("duplicate sample id '" + rows[r][0] + "'", lines[r]);
  }
  return out;
}

std::vector<FoldRun> plan_folds(const ExperimentConfig& config,
                                const split::FoldAssignment& assignment,
                                const std::map<std::string, std::string>* dates) {
  std::vector<std::string> train_ids, valid_ids;
  for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
    if (assignment.folds[i] == split::Fold::train) train_ids.push_back(assignment.ids[i]);
    if (assignment.folds[i] == split::Fold::valid) valid_ids.push_back(assignment.ids[i]);
  }
  std::vector<FoldRun> plan;
  if (config.cv_mode == CvMode::fixed) {
    if (train_ids.empty() || valid_ids.empty())
      throw ConfigError("fixed cross-validation needs nonempty train and valid folds");
    for (std::size_t k = 0; k < config.folds; ++k) plan.push_back({train_ids, valid_ids, k});
    return plan;
  }
  std::vector<std::string> pool = train_ids;
  pool.insert(pool.end(), valid_ids.begin(), valid_ids.end());
  const auto parts = kfold_partition(pool, config.folds, Rng::derive(config.seed, 0xF01D), dates);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    FoldRun run;
    run.valid_ids = parts[k];
    for (std::size_t o = 0; o < parts.size(); ++o)
      if (o != k) run.train_ids.insert(run.train_ids.end(), parts[o].begin(), parts[o].end());
    run.seed = k;
    plan.push_back(std::move(run));
  }
  return plan;
}

RunRecord cross_validate(const ModelConfig& model, const Dataset& dev,
                         const std::vector<FoldRun>& plan, const ExperimentConfig& config,
                         std::vector<TrainedFold>* trained) {
  RunRecord rec;
  rec.model = model;
  rec.seed = model.seed;
  double sum = 0.0;
  for (const auto& fold : plan) {
    const Dataset tr = dev.subset(fold.train_ids);
    const Dataset va = dev.subset(fold.valid_ids);
    ModelConfig m = model;
    m.seed = Rng::derive(model.seed, fold.seed);
    auto net = std::make_shared<PotentialNetModel>(m);
    TrainOptions opt;
    opt.epochs = config.epochs;
    opt.batch_size = config.batch_size;
    opt.seed = Rng::derive(m.seed, 0x7EA1);
    opt.threads = config.batch_threads;
    const TrainResult r = train_model(*net, tr.samples, va.samples, opt);
    rec.fold_scores.push_back(r.best_score);
    rec.best_epochs.push_back(r.best_epoch);
    if (r.failed) {
      rec.failed = true;
      rec.failure = r.failure;
    } else if (std::isnan(r.best_score)) {
      rec.failed = true;
      rec.failure = "validation score undefined";
    }
    sum += r.best_score;
    if (trained) trained->push_back({r, net});
    if (rec.failed) break;
  }
  rec.mean_score = rec.failed ? kNaN : sum / static_cast<double>(plan.size());
  return rec;
}

nlohmann::json to_json(const RunRecord& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  nlohmann::json scores = nlohmann::json::array();
  for (double s : r.fold_scores) scores.push_back(num(s));
  return {{"sample_index", r.sample_index}, {"model", to_json(r.model)},
          {"seed", r.seed},                 {"fold_scores", scores},
          {"best_epochs", r.best_epochs},   {"mean_score", num(r.mean_score)},
          {"failed", r.failed},             {"failure", r.failure}};
}

// ---------------------------------------------------------------------------

namespace {

std::string metadata_for(const PotentialNetModel& model, const std::vector<std::string>& tasks) {
  return nlohmann::json{{"format", "sgc-model"}, {"model", to_json(model.config())},
                        {"task_names", tasks}}
      .dump();
}

}  // namespace

std::string checkpoint_bytes(const PotentialNetModel& model,
                             const std::vector<std::string>& task_names) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, metadata_for(model, task_names), model.parameters());
  return out.str();
}

void save_model(const std::string& path, const PotentialNetModel& model,
                const std::vector<std::string>& task_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(out, metadata_for(model, task_names), model.parameters());
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  const Checkpoint ck = read_checkpoint(in);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ck.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  if (!meta.contains("model")) throw IoError("checkpoint metadata lacks a model config");
  LoadedModel out;
  out.model = std::make_shared<PotentialNetModel>(model_config_from_json(meta.at("model")));
  if (meta.contains("task_names"))
    out.task_names = meta.at("task_names").get<std::vector<std::string>>();
  load_parameters(out.model->parameters(), ck);
  return out;
}

void check_dataset_compatible(const PotentialNetModel& model, const Dataset& data) {
  const ModelConfig& c = model.config();
  if (!(data.schema == c.schema))
    throw ShapeError("schema mismatch: dataset edge schema differs from the model's");
  if (data.element_vocab != c.element_vocab)
    throw ShapeError("schema mismatch: dataset element vocabulary differs from the model's");
  if (data.task_count() != c.task_count)
    throw ShapeError("schema mismatch: dataset has " + std::to_string(data.task_count()) +
                     " tasks, model predicts " + std::to_string(c.task_count));
}

metrics::EvalReport evaluate(const PotentialNetModel& model, const Dataset& data, double chi) {
  check_dataset_compatible(model, data);
  std::vector<Sample> labeled;
  for (const auto& s : data.samples)
    if (has_label(s)) labeled.push_back(s);
  if (labeled.empty()) throw NumericError("no labeled samples to evaluate");
  const Tensor pred = predict_batch(model, labeled);
  const std::size_t tc = model.config().task_count;
  const bool regression = model.config().task_kind == TaskKind::regression;
  std::vector<std::vector<double>> y(tc, std::vector<double>(labeled.size(), kNaN));
  std::vector<std::vector<double>> p(tc, std::vector<double>(labeled.size(), 0.0));
  for (std::size_t i = 0; i < labeled.size(); ++i)
    for (std::size_t t = 0; t < tc; ++t) {
      if (labeled[i].labels[t]) y[t][i] = *labeled[i].labels[t];
      const double v = static_cast<double>(pred(i, t));
      p[t][i] = regression ? v : 1.0 / (1.0 + std::exp(-v));
    }
  return regression ? metrics::evaluate_regression(y, p, chi, data.task_names)
                    : metrics::evaluate_classification(y, p, data.task_names);
}

}  // namespace sgc::inline SGC_PRECISION_TAG
