#include "sgc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "sgc/error.hpp"

namespace sgc::metrics {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pair(std::span<const double> y, std::span<const double> y_hat, const char* what,
                std::size_t min_n = 1) {
  if (y.size() != y_hat.size())
    throw ShapeError(std::string(what) + ": " + std::to_string(y.size()) + " observations vs " +
                     std::to_string(y_hat.size()) + " predictions");
  if (y.size() < min_n)
    throw NumericError(std::string(what) + ": needs at least " + std::to_string(min_n) +
                       " samples");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::size_t top_count(std::size_t n, double chi) {
  if (!(chi > 0.0 && chi <= 1.0)) throw ConfigError("chi must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(chi * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

double mean_z_of_first(std::span<const double> y, const std::vector<std::size_t>& order,
                       std::size_t k, double mu, double sigma) {
  double s = 0.0;
  for (std::size_t r = 0; r < k; ++r) s += (y[order[r]] - mu) / sigma;
  return s / static_cast<double>(k);
}

}  // namespace

double ef_chi_regression(std::span<const double> y, std::span<const double> y_hat, double chi) {
  if (y.empty()) throw NumericError("ef_chi_regression: empty input");
  check_pair(y, y_hat, "ef_chi_regression");
  const std::size_t n = y.size();
  const std::size_t k = top_count(n, chi);
  const double mu = mean_of(y);
  const double sigma = population_sd(y, mu);
  if (!(sigma > 0.0)) throw NumericError("degenerate label distribution (sigma(y) = 0)");
  // The whole sample has mean z-score zero by construction.
  if (k == n) return 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return y_hat[a] > y_hat[b]; });
  return mean_z_of_first(y, order, k, mu, sigma);
}

double ef_chi_upper_bound(std::span<const double> y, double chi) {
  return ef_chi_regression(y, y, chi);
}

double pearson(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "pearson", 2);
  const double my = mean_of(y), mp = mean_of(y_hat);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my, b = y_hat[i] - mp;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericError("pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) ranks[order[q]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "spearman", 2);
  const auto ry = average_ranks(y);
  const auto rp = average_ranks(y_hat);
  return pearson(ry, rp);
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "r2", 2);
  const double my = mean_of(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  if (!(ss_tot > 0.0)) throw NumericError("r2: zero variance in observations");
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double mue(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "mue");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double residual_stdev(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, "residual_stdev");
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - y_hat[i];
  return population_sd(r, mean_of(r));
}

double roc_auc(std::span<const double> labels, std::span<const double> scores) {
  check_pair(labels, scores, "roc_auc");
  double n_pos = 0, n_neg = 0;
  for (double l : labels) {
    if (l == 1.0)
      ++n_pos;
    else if (l == 0.0)
      ++n_neg;
    else
      throw NumericError("roc_auc: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) throw NumericError("roc_auc: both classes must be present");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1.0) rank_sum += ranks[i];
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {kNaN, kNaN};
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  Summary s;
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  s.stdev = population_sd(v, mean_of(v));
  return s;
}

std::string format_summary(const Summary& s, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f (%.*f)", precision, s.median, precision, s.stdev);
  return buf;
}

namespace {

template <class F>
double guarded(F f) {
  try {
    return f();
  } catch (const Error&) {
    return kNaN;
  }
}

// Pairs of present observations for one task.
void present_pairs(const std::vector<double>& y, const std::vector<double>& p,
                   std::vector<double>& oy, std::vector<double>& op) {
  if (y.size() != p.size()) throw ShapeError("observation and prediction counts differ");
  oy.clear();
  op.clear();
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isnan(y[i])) {
      oy.push_back(y[i]);
      op.push_back(p[i]);
    }
}

void fill_mean(EvalReport& r) {
  r.mean.clear();
  if (r.per_task.empty()) return;
  for (const auto& [name, _] : r.per_task.front()) {
    double s = 0.0;
    for (const auto& m : r.per_task) s += m.at(name);
    r.mean[name] = s / static_cast<double>(r.per_task.size());
  }
}

std::vector<std::string> default_names(std::size_t t, std::vector<std::string> names) {
  if (names.size() == t) return names;
  names.clear();
  for (std::size_t k = 0; k < t; ++k) names.push_back("task" + std::to_string(k));
  return names;
}

}  // namespace

EvalReport evaluate_regression(const std::vector<std::vector<double>>& y,
                               const std::vector<std::vector<double>>& y_hat, double chi,
                               std::vector<std::string> task_names) {
  if (y.size() != y_hat.size()) throw ShapeError("task counts differ");
  EvalReport r;
  r.task_kind = "regression";
  r.chi = chi;
  r.n = y.empty() ? 0 : y.front().size();
  r.tasks = default_names(y.size(), std::move(task_names));
  std::vector<double> oy, op;
  for (std::size_t t = 0; t < y.size(); ++t) {
    present_pairs(y[t], y_hat[t], oy, op);
    MetricMap m;
    m["r2"] = guarded([&] { return r2(oy, op); });
    m["ef_chi"] = guarded([&] { return ef_chi_regression(oy, op, chi); });
    m["pearson"] = guarded([&] { return pearson(oy, op); });
    m["spearman"] = guarded([&] { return spearman(oy, op); });
    m["stdev"] = guarded([&] { return residual_stdev(oy, op); });
    m["mue"] = guarded([&] { return mue(oy, op); });
    m["rmse"] = guarded([&] { return rmse(oy, op); });
    r.per_task.push_back(std::move(m));
  }
  fill_mean(r);
  return r;
}

EvalReport evaluate_classification(const std::vector<std::vector<double>>& y,
                                   const std::vector<std::vector<double>>& scores,
                                   std::vector<std::string> task_names) {
  if (y.size() != scores.size()) throw ShapeError("task counts differ");
  EvalReport r;
  r.task_kind = "multitask_classification";
  r.chi = 0.0;
  r.n = y.empty() ? 0 : y.front().size();
  r.tasks = default_names(y.size(), std::move(task_names));
  std::vector<double> oy, op;
  for (std::size_t t = 0; t < y.size(); ++t) {
    present_pairs(y[t], scores[t], oy, op);
    MetricMap m;
    m["roc_auc"] = guarded([&] { return roc_auc(oy, op); });
    r.per_task.push_back(std::move(m));
  }
  fill_mean(r);
  return r;
}

namespace {

nlohmann::json metric_map_json(const MetricMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
  return j;
}

MetricMap metric_map_from(const nlohmann::json& j) {
  MetricMap m;
  for (auto it = j.begin(); it != j.end(); ++it)
    m[it.key()] = it.value().is_null() ? kNaN : it.value().get<double>();
  return m;
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : report.per_task) per.push_back(metric_map_json(m));
  return {{"task_kind", report.task_kind}, {"n", report.n},           {"chi", report.chi},
          {"tasks", report.tasks},         {"per_task", per},         {"mean", metric_map_json(report.mean)}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task_kind = j.at("task_kind").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.chi = j.at("chi").get<double>();
  r.tasks = j.at("tasks").get<std::vector<std::string>>();
  for (const auto& m : j.at("per_task")) r.per_task.push_back(metric_map_from(m));
  r.mean = metric_map_from(j.at("mean"));
  return r;
}

std::string format_table(const EvalReport& report) {
  if (report.per_task.empty()) return "(no tasks)\n";
  std::vector<std::string> cols;
  for (const auto& [k, _] : report.per_task.front()) cols.push_back(k);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"task"};
  header.insert(header.end(), cols.begin(), cols.end());
  rows.push_back(header);
  auto add_row = [&](const std::string& name, const MetricMap& m) {
    std::vector<std::string> row{name};
    char buf[32];
    for (const auto& c : cols) {
      std::snprintf(buf, sizeof buf, "%.4f", m.at(c));
      row.emplace_back(std::isfinite(m.at(c)) ? buf : "nan");
    }
    rows.push_back(std::move(row));
  };
  for (std::size_t t = 0; t < report.per_task.size(); ++t) add_row(report.tasks[t], report.per_task[t]);
  if (report.per_task.size() > 1) add_row("mean", report.mean);

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      if (c == 0)
        out += row[c] + std::string(width[c] - row[c].size(), ' ');
      else
        out += std::string(width[c] - row[c].size(), ' ') + row[c];
    }
    out += '\n';
  }
  return out;
}

}  // namespace sgc::metrics
