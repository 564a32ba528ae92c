#pragma once

// Evaluation statistics for regression and classification predictions.

#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sgc::metrics {

/// Regression enrichment factor: mean z-score (population sigma over all
/// observed y) of the observed values of the top k = max(1, round(chi*N))
/// samples ranked by descending prediction. Prediction ties keep input order.
/// Throws NumericError when sigma(y) == 0 or the input is empty.
double ef_chi_regression(std::span<const double> y, std::span<const double> y_hat, double chi);

/// Largest attainable enrichment: the same average taken over the top-k
/// observed values themselves.
double ef_chi_upper_bound(std::span<const double> y, double chi);

double pearson(std::span<const double> y, std::span<const double> y_hat);
double spearman(std::span<const double> y, std::span<const double> y_hat);
/// 1 - SS_res / SS_tot.
double r2(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
/// Mean unsigned error.
double mue(std::span<const double> y, std::span<const double> y_hat);
/// Population standard deviation of the residuals y - y_hat.
double residual_stdev(std::span<const double> y, std::span<const double> y_hat);

/// Mann-Whitney AUC: P(score_pos > score_neg) + P(equal) / 2.
/// Labels are 0/1. Throws NumericError when only one class is present.
double roc_auc(std::span<const double> labels, std::span<const double> scores);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct Summary {
  double median = 0.0;
  double stdev = 0.0;  // population
};

Summary summarize(std::span<const double> values);
/// "0.668 (0.043)"
std::string format_summary(const Summary& s, int precision = 3);

using MetricMap = std::map<std::string, double>;

struct EvalReport {
  std::string task_kind;  // "regression" | "multitask_classification"
  std::size_t n = 0;
  double chi = 0.05;
  std::vector<std::string> tasks;
  std::vector<MetricMap> per_task;
  MetricMap mean;  // across tasks
};

/// Column-major per task: y[t][i]. Absent observations are NaN and skipped.
/// Metrics that are undefined on the data are reported as NaN.
EvalReport evaluate_regression(const std::vector<std::vector<double>>& y,
                               const std::vector<std::vector<double>>& y_hat, double chi,
                               std::vector<std::string> task_names = {});
EvalReport evaluate_classification(const std::vector<std::vector<double>>& y,
                                   const std::vector<std::vector<double>>& scores,
                                   std::vector<std::string> task_names = {});

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
/// Aligned-column text table, one row per task plus a mean row when T > 1.
std::string format_table(const EvalReport& report);

}  // namespace sgc::metrics
