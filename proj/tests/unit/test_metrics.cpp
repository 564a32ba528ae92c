#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "sgc/error.hpp"
#include "sgc/metrics.hpp"
#include "sgc/random.hpp"

using namespace sgc;
using namespace sgc::metrics;
using Vec = std::vector<double>;

namespace {

Vec noisy_copy(Rng& rng, const Vec& y, double noise) {
  Vec out;
  for (double v : y) out.push_back(v + noise * rng.normal());
  return out;
}

Vec random_vec(Rng& rng, std::size_t n) {
  Vec v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(-3, 3));
  return v;
}

}  // namespace

TEST_CASE("enrichment factor") {
  SUBCASE("chi = 1 is exactly zero") {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
      Vec y = random_vec(rng, 17), p = random_vec(rng, 17);
      CHECK(ef_chi_regression(y, p, 1.0) == 0.0);
    }
  }
  SUBCASE("single top sample") {
    Vec y{0, 0, 0, 4}, p{0.1, 0.2, 0.3, 0.9};
    CHECK(ef_chi_regression(y, p, 0.25) == doctest::Approx(3.0 / std::sqrt(3.0)).epsilon(1e-12));
  }
  SUBCASE("prediction ties keep input order") {
    Vec y{5, 1, 2, 3}, p{1, 1, 1, 1};
    // Top sample is index 0.
    const double mu = 11.0 / 4;
    double var = 0;
    for (double v : y) var += (v - mu) * (v - mu);
    CHECK(ef_chi_regression(y, p, 0.25) == doctest::Approx((5 - mu) / std::sqrt(var / 4)));
  }
  SUBCASE("k is round(chi N), at least one") {
    Vec y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(ef_chi_regression(y, y, 0.01) == doctest::Approx(testing::oracle::enrichment(y, y, 0.1)));
    CHECK(ef_chi_regression(y, y, 0.25) == doctest::Approx(testing::oracle::enrichment(y, y, 0.3)));
  }
  SUBCASE("perfect ranking reaches the upper bound") {
    Rng rng(2);
    Vec y = random_vec(rng, 50);
    CHECK(ef_chi_regression(y, y, 0.1) == ef_chi_upper_bound(y, 0.1));
    CHECK(ef_chi_upper_bound(y, 0.1) == doctest::Approx(testing::oracle::enrichment_bound(y, 0.1)).epsilon(1e-12));
    for (int t = 0; t < 20; ++t) {
      Vec p = random_vec(rng, 50);
      CHECK(ef_chi_regression(y, p, 0.1) <= ef_chi_upper_bound(y, 0.1) + 1e-12);
    }
  }
  SUBCASE("can exceed one") {
    Vec y(20, 0.0);
    y[0] = 10;
    Vec p(20, 0.0);
    p[0] = 1;
    CHECK(ef_chi_regression(y, p, 0.05) > 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_WITH_AS(ef_chi_regression(Vec{2, 2, 2}, Vec{1, 2, 3}, 0.5),
                         doctest::Contains("degenerate label distribution"), NumericError);
    CHECK_THROWS_AS(ef_chi_regression(Vec{}, Vec{}, 0.5), NumericError);
    CHECK_THROWS_AS(ef_chi_regression(Vec{1, 2}, Vec{1}, 0.5), ShapeError);
    CHECK_THROWS_AS(ef_chi_regression(Vec{1, 2}, Vec{1, 2}, 0.0), ConfigError);
  }
}

TEST_CASE("enrichment invariances") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vec y = random_vec(rng, 40), p = random_vec(rng, 40);
    const double base = ef_chi_regression(y, p, 0.1);
    Vec scaled, squashed;
    for (double v : y) scaled.push_back(2.5 * v + 7);
    for (double v : p) squashed.push_back(std::exp(v));
    CHECK(ef_chi_regression(scaled, p, 0.1) == doctest::Approx(base).epsilon(1e-12));
    CHECK(ef_chi_regression(y, squashed, 0.1) == base);
  }
}

TEST_CASE("correlation and error metrics") {
  SUBCASE("perfect prediction") {
    Vec y{1, 4, 2, 8, 5};
    CHECK(pearson(y, y) == doctest::Approx(1.0));
    CHECK(spearman(y, y) == doctest::Approx(1.0));
    CHECK(r2(y, y) == 1.0);
    CHECK(rmse(y, y) == 0.0);
    CHECK(mue(y, y) == 0.0);
    CHECK(residual_stdev(y, y) == 0.0);
  }
  SUBCASE("negated zero-mean data") {
    Vec y{-2, -1, 0, 1, 2}, p{2, 1, 0, -1, -2};
    CHECK(pearson(y, p) == doctest::Approx(-1.0));
  }
  SUBCASE("spearman is rank based") {
    Rng rng(4);
    Vec y = random_vec(rng, 30), p = random_vec(rng, 30);
    Vec cubed;
    for (double v : p) cubed.push_back(v * v * v);
    CHECK(spearman(y, cubed) == doctest::Approx(spearman(y, p)).epsilon(1e-12));
  }
  SUBCASE("average ranks") {
    Vec v{3, 1, 3, 2};
    CHECK(average_ranks(v) == Vec{3.5, 1, 3.5, 2});
  }
  SUBCASE("zero variance") {
    CHECK_THROWS_AS(pearson(Vec{1, 1, 1}, Vec{1, 2, 3}), NumericError);
    CHECK_THROWS_AS(r2(Vec{1, 1}, Vec{1, 2}), NumericError);
    CHECK_THROWS_AS(pearson(Vec{1}, Vec{1}), NumericError);
  }
  SUBCASE("random instances against the scalar oracle") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      Vec y = random_vec(rng, 10);
      Vec p = noisy_copy(rng, y, 1.0);
      CHECK(std::abs(pearson(y, p) - testing::oracle::pearson(y, p)) <= 1e-10);
      CHECK(std::abs(spearman(y, p) - testing::oracle::spearman(y, p)) <= 1e-10);
      CHECK(std::abs(r2(y, p) - testing::oracle::r2(y, p)) <= 1e-10);
      CHECK(std::abs(rmse(y, p) - testing::oracle::rmse(y, p)) <= 1e-10);
      CHECK(std::abs(mue(y, p) - testing::oracle::mue(y, p)) <= 1e-10);
      CHECK(std::abs(residual_stdev(y, p) - testing::oracle::residual_stdev(y, p)) <= 1e-10);
    }
  }
}

TEST_CASE("roc auc") {
  CHECK(roc_auc(Vec{0, 0, 1, 1}, Vec{0.1, 0.2, 0.8, 0.9}) == 1.0);
  CHECK(roc_auc(Vec{0, 1, 0, 1}, Vec{0.5, 0.5, 0.5, 0.5}) == 0.5);
  CHECK(roc_auc(Vec{1, 1, 0, 0}, Vec{0.1, 0.2, 0.8, 0.9}) == 0.0);

  Vec labels{1, 0, 1, 1, 0, 0}, scores{0.9, 0.7, 0.7, 0.3, 0.4, 0.1};
  CHECK(roc_auc(labels, scores) == doctest::Approx(testing::oracle::auc_trapezoid(labels, scores)));
  CHECK(roc_auc(labels, scores) == doctest::Approx(testing::oracle::auc_pairs(labels, scores)));

  CHECK_THROWS_AS(roc_auc(Vec{1, 1}, Vec{0.2, 0.3}), NumericError);
  CHECK_THROWS_AS(roc_auc(Vec{1, 2}, Vec{0.2, 0.3}), NumericError);
}

TEST_CASE("summaries") {
  Vec v{0.70, 0.62, 0.66};
  Summary s = summarize(v);
  CHECK(s.median == 0.66);
  CHECK(s.stdev == doctest::Approx(testing::oracle::population_stdev(v)));
  CHECK(format_summary({0.668, 0.043}) == "0.668 (0.043)");
  CHECK(summarize(Vec{1, 2, 3, 4}).median == 2.5);
  CHECK(std::isnan(summarize(Vec{}).median));
}

TEST_CASE("regression report") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Vec> y{{1, 2, 3, 4, 5}, {1, nan, 0, nan, 1}};
  std::vector<Vec> p{{1.1, 1.9, 3.2, 3.8, 5.1}, {0.5, 9, 0.1, 9, 0.4}};
  EvalReport r = evaluate_regression(y, p, 1.0, {"a", "b"});
  CHECK(r.n == 5);
  REQUIRE(r.per_task.size() == 2);
  for (const char* key : {"r2", "ef_chi", "pearson", "spearman", "stdev", "mue", "rmse"})
    CHECK(r.per_task[0].count(key) == 1);
  CHECK(r.per_task[0].at("ef_chi") == 0.0);
  CHECK(r.per_task[1].at("mue") == doctest::Approx((0.5 + 0.1 + 0.6) / 3));
  CHECK(r.mean.at("rmse") ==
        doctest::Approx((r.per_task[0].at("rmse") + r.per_task[1].at("rmse")) / 2));

  auto back = report_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  CHECK(back.per_task[1].at("pearson") == r.per_task[1].at("pearson"));

  std::string table = format_table(r);
  CHECK(table.find("ef_chi") != std::string::npos);
  CHECK(table.find("mean") != std::string::npos);
}

TEST_CASE("undefined metrics become null in JSON") {
  std::vector<Vec> y{{2, 2, 2}};
  std::vector<Vec> p{{1, 2, 3}};
  EvalReport r = evaluate_regression(y, p, 0.5);
  CHECK(std::isnan(r.per_task[0].at("pearson")));
  auto j = to_json(r);
  CHECK(j["per_task"][0]["pearson"].is_null());
  auto back = report_from_json(j);
  CHECK(std::isnan(back.per_task[0].at("ef_chi")));
}

TEST_CASE("classification report") {
  std::vector<Vec> y{{0, 1, 1, 0}, {1, 0, std::numeric_limits<double>::quiet_NaN(), 1}};
  std::vector<Vec> s{{0.1, 0.9, 0.8, 0.3}, {0.2, 0.6, 0.0, 0.4}};
  EvalReport r = evaluate_classification(y, s);
  CHECK(r.task_kind == "multitask_classification");
  CHECK(r.tasks == std::vector<std::string>{"task0", "task1"});
  CHECK(r.per_task[0].at("roc_auc") == 1.0);
  CHECK(r.per_task[1].at("roc_auc") == 0.0);
  CHECK(r.mean.at("roc_auc") == 0.5);
}
