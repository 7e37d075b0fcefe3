#include <doctest.h>

#include <cmath>
#include <vector>

#include "imfcast/metrics.hpp"
#include "imfcast/rng.hpp"

using namespace imfcast;

TEST_CASE("perfect prediction") {
  const std::vector<double> y{1, 2, 3};
  const MetricsBundle m = compute_metrics(y, y);
  CHECK(m.mse == doctest::Approx(0.0));
  CHECK(m.rmse == doctest::Approx(0.0));
  CHECK(m.mae == doctest::Approx(0.0));
  REQUIRE(m.mape.has_value());
  CHECK(*m.mape == doctest::Approx(0.0));
  REQUIRE(m.r2.has_value());
  CHECK(*m.r2 == doctest::Approx(1.0));
}

TEST_CASE("mean predictor: hand-computed values, r2 exactly 0") {
  // y=(1,2,3), yhat=(2,2,2): errors (1,0,-1); mse = 2/3, mae = 2/3,
  // mape = 100*(1/1 + 0 + 1/3)/3 = 44.44%, SSres = SStot = 2 -> r2 = 0.
  const std::vector<double> y{1, 2, 3}, p{2, 2, 2};
  const MetricsBundle m = compute_metrics(y, p);
  CHECK(m.mse == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(m.rmse == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
  CHECK(m.rmse == doctest::Approx(0.81650).epsilon(1e-5));
  CHECK(m.mae == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  REQUIRE(m.mape.has_value());
  CHECK(*m.mape == doctest::Approx(100.0 * (1.0 + 0.0 + 1.0 / 3.0) / 3.0).epsilon(1e-12));
  REQUIRE(m.r2.has_value());
  CHECK(std::abs(*m.r2) <= 1e-12);
}

TEST_CASE("constant targets omit r2 with a reason") {
  const std::vector<double> y{4, 4, 4}, p{4.5, 4.0, 3.5};
  const MetricsBundle m = compute_metrics(y, p);
  CHECK_FALSE(m.r2.has_value());
  CHECK(!m.r2_omitted_reason.empty());
}

TEST_CASE("a target at zero omits MAPE with a reason") {
  const std::vector<double> y{1.0, 0.0, 2.0}, p{1.0, 0.5, 2.0};
  const MetricsBundle m = compute_metrics(y, p);
  CHECK_FALSE(m.mape.has_value());
  CHECK(!m.mape_omitted_reason.empty());
  CHECK(m.mae == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("rmse squared equals mse") {
  SeededRng rng(3);
  std::vector<double> y(50), p(50);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform(1.0, 100.0);
    p[i] = y[i] + rng.uniform(-5.0, 5.0);
  }
  const MetricsBundle m = compute_metrics(y, p);
  CHECK(m.rmse * m.rmse == doctest::Approx(m.mse).epsilon(1e-12));
}

TEST_CASE("shift behavior: MSE/RMSE/MAE and R2 invariant, MAPE changes") {
  SeededRng rng(9);
  std::vector<double> y(40), p(40);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform(5.0, 10.0);
    p[i] = y[i] + rng.uniform(-1.0, 1.0);
  }
  const MetricsBundle base = compute_metrics(y, p);
  std::vector<double> ys = y, ps = p;
  for (double& v : ys) v += 100.0;
  for (double& v : ps) v += 100.0;
  const MetricsBundle shifted = compute_metrics(ys, ps);
  CHECK(shifted.mse == doctest::Approx(base.mse).epsilon(1e-9));
  CHECK(shifted.rmse == doctest::Approx(base.rmse).epsilon(1e-9));
  CHECK(shifted.mae == doctest::Approx(base.mae).epsilon(1e-9));
  REQUIRE(base.mape.has_value());
  REQUIRE(shifted.mape.has_value());
  CHECK(*shifted.mape < *base.mape);  // relative errors shrink as |y| grows
  // SSres and SStot (about the target mean) are both shift-invariant, so R2
  // stays put as well.
  REQUIRE(base.r2.has_value());
  REQUIRE(shifted.r2.has_value());
  CHECK(*shifted.r2 == doctest::Approx(*base.r2).epsilon(1e-9));
}

TEST_CASE("input validation") {
  const std::vector<double> y{1, 2}, p{1};
  CHECK_THROWS_AS(compute_metrics(y, p), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<double>{}),
                  std::invalid_argument);
  const std::vector<double> bad{1.0, std::nan("")};
  const std::vector<double> ok{1.0, 2.0};
  CHECK_THROWS_AS(compute_metrics(bad, ok), std::invalid_argument);
}
