#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "rtggm/gibbs.hpp"
#include "rtggm/impute.hpp"
#include "rtggm/model.hpp"
#include "rtggm/rng.hpp"

using rtggm::Kind;
using rtggm::ModelParams;
using rtggm::ObservationMask;
using rtggm::RngStream;

namespace {

ObservationMask mask_of(std::initializer_list<int> flags) {
  ObservationMask m;
  for (int f : flags) m.observed.push_back(f != 0);
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("observation masks count and validate") {
  const ObservationMask m = mask_of({1, 0, 1, 0, 0});
  CHECK(m.size() == 5);
  CHECK(m.n_observed() == 2);
  CHECK(m.n_unobserved() == 3);
  CHECK_NOTHROW(m.validate(5));
  CHECK_THROWS_AS(m.validate(4), std::invalid_argument);
  CHECK_THROWS_AS(mask_of({1, 1, 1}).validate(3), std::invalid_argument);
  CHECK_THROWS_AS(mask_of({0, 0, 0}).validate(3), std::invalid_argument);
}

TEST_CASE("the conditional model restricts rows and shifts the hidden bias") {
  ModelParams model;
  model.kind = Kind::TruncatedReal;
  model.W = Eigen::MatrixXd(3, 2);
  model.W << 0.5, -0.3, 0.2, 0.7, -0.4, 0.1;
  model.a = vec({1.0, 1.5, 2.0});
  model.d = vec({1.2, 0.8});
  model.b = vec({0.3, -0.2, 0.4});
  model.c = vec({0.1, -0.6});

  const Eigen::VectorXd x = vec({2.0, 123.0, 0.5});  // middle entry unused
  const ObservationMask mask = mask_of({1, 0, 1});
  const ModelParams cond = rtggm::conditional_model(model, x, mask);

  CHECK(cond.kind == Kind::TruncatedReal);
  REQUIRE(cond.n() == 1);
  REQUIRE(cond.m() == 2);
  CHECK(cond.W(0, 0) == 0.2);
  CHECK(cond.W(0, 1) == 0.7);
  CHECK(cond.a[0] == 1.5);
  CHECK(cond.b[0] == -0.2);
  CHECK(cond.d == model.d);
  // c + x0 * W.row(0) + x2 * W.row(2) = (0.1 + 1.0 - 0.2, -0.6 - 0.6 + 0.05)
  CHECK(cond.c[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(cond.c[1] == doctest::Approx(-1.15).epsilon(1e-15));

  // several unobserved coordinates keep ascending order
  const ModelParams two = rtggm::conditional_model(model, x, mask_of({0, 1, 0}));
  REQUIRE(two.n() == 2);
  CHECK(two.b[0] == 0.3);
  CHECK(two.b[1] == 0.4);
  CHECK(two.a[0] == 1.0);
  CHECK(two.a[1] == 2.0);
  CHECK(two.W(0, 0) == 0.5);
  CHECK(two.W(1, 0) == -0.4);
}

TEST_CASE("the conditional model rejects bad inputs") {
  RngStream rng(5);
  const ModelParams count = oracle::random_model(Kind::Count, 3, 2, rng);
  CHECK_THROWS_AS(
      rtggm::conditional_model(count, vec({1.0, 0.0, 1.0}), mask_of({1, 0, 1})),
      std::invalid_argument);

  const ModelParams bin = oracle::random_model(Kind::Binary, 3, 2, rng);
  CHECK_THROWS_AS(rtggm::conditional_model(bin, vec({1.0, 0.0}), mask_of({1, 0, 1})),
                  std::invalid_argument);
  // observed values must live in the kind's domain
  CHECK_THROWS_AS(
      rtggm::conditional_model(bin, vec({0.5, 0.0, 1.0}), mask_of({1, 0, 1})),
      std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(rtggm::conditional_model(bin, vec({nan, 0.0, 1.0}), mask_of({1, 0, 1})),
                  std::invalid_argument);
  // ...but garbage in unobserved slots is ignored
  CHECK_NOTHROW(rtggm::conditional_model(bin, vec({1.0, nan, 1.0}), mask_of({1, 0, 1})));

  const ModelParams tr = oracle::random_model(Kind::TruncatedReal, 3, 2, rng);
  CHECK_THROWS_AS(
      rtggm::conditional_model(tr, vec({-0.5, 0.0, 1.0}), mask_of({1, 0, 1})),
      std::invalid_argument);
}

TEST_CASE("conditioning shifts the log-density by a constant in the free coordinates") {
  RngStream rng(11);

  // binary: enumerate every completion
  const ModelParams bin = oracle::random_model(Kind::Binary, 4, 2, rng, 0.7);
  const ObservationMask bmask = mask_of({1, 0, 0, 1});
  Eigen::VectorXd bx = vec({1.0, 0.0, 0.0, 0.0});
  const ModelParams bcond = rtggm::conditional_model(bin, bx, bmask);
  const double bconst = bin.b[0] * bx[0] + bin.b[3] * bx[3];  // a unused for Binary
  for (int v0 = 0; v0 <= 1; ++v0)
    for (int v1 = 0; v1 <= 1; ++v1) {
      Eigen::VectorXd full = bx;
      full[1] = v0;
      full[2] = v1;
      const Eigen::VectorXd sub = vec({double(v0), double(v1)});
      CHECK(rtggm::log_p_star(bin, full) - rtggm::log_p_star(bcond, sub) ==
            doctest::Approx(bconst).epsilon(1e-12));
    }

  // truncated-real: random nonnegative completions
  const ModelParams tr = oracle::random_model(Kind::TruncatedReal, 3, 2, rng);
  const ObservationMask tmask = mask_of({0, 1, 1});
  Eigen::VectorXd tx = vec({0.0, 1.7, 0.4});
  const ModelParams tcond = rtggm::conditional_model(tr, tx, tmask);
  const double tconst = tr.b[1] * tx[1] + tr.b[2] * tx[2] -
                        0.5 * (tr.a[1] * tx[1] * tx[1] + tr.a[2] * tx[2] * tx[2]);
  for (double v : {0.0, 0.3, 1.1, 2.9}) {
    Eigen::VectorXd full = tx;
    full[0] = v;
    CHECK(rtggm::log_p_star(tr, full) - rtggm::log_p_star(tcond, vec({v})) ==
          doctest::Approx(tconst).epsilon(1e-12));
  }
}

TEST_CASE("imputation replays the public sampling primitives exactly") {
  RngStream rng(17);
  const ModelParams model = oracle::random_model(Kind::Binary, 4, 2, rng, 0.5);
  const Eigen::VectorXd x = vec({1.0, 0.0, 0.0, 1.0});
  const ObservationMask mask = mask_of({1, 0, 0, 1});

  RngStream run(29);
  const Eigen::VectorXd est = rtggm::impute(model, x, mask, 3, 5, run);
  REQUIRE(est.size() == 2);

  const ModelParams cond = rtggm::conditional_model(model, x, mask);
  RngStream replay(29);
  Eigen::VectorXd xu = rtggm::initial_visible_state(cond, replay);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
  for (long t = 0; t < 8; ++t) {
    const Eigen::VectorXd h = rtggm::sample_hidden(cond, xu, replay);
    const rtggm::VisibleConditional vc = rtggm::cond_visible(cond, h);
    if (t >= 3) acc += rtggm::visible_mean(vc);
    xu = rtggm::sample_visible(vc, replay);
  }
  acc /= 5.0;
  CHECK(est[0] == acc[0]);
  CHECK(est[1] == acc[1]);
}

TEST_CASE("imputation averages conditional means rather than raw draws") {
  RngStream rng(23);
  const ModelParams model = oracle::random_model(Kind::Binary, 3, 2, rng, 0.8);
  const Eigen::VectorXd x = vec({1.0, 0.0, 0.0});
  const ObservationMask mask = mask_of({1, 0, 1});
  RngStream run(31);
  const Eigen::VectorXd est = rtggm::impute(model, x, mask, 0, 1, run);
  REQUIRE(est.size() == 1);
  // a single Rao-Blackwellized emission is a probability strictly inside (0,1)
  CHECK(est[0] > 0.0);
  CHECK(est[0] < 1.0);
}

TEST_CASE("with zero couplings the imputation is the logistic bias exactly") {
  ModelParams model;
  model.kind = Kind::Binary;
  model.W = Eigen::MatrixXd::Zero(3, 2);
  model.a = Eigen::VectorXd::Zero(3);
  model.d = vec({1.0, 2.0});
  model.b = vec({0.4, -0.7, 0.2});
  model.c = vec({0.3, -0.1});
  const Eigen::VectorXd x = vec({1.0, 0.0, 0.0});
  const ObservationMask mask = mask_of({1, 0, 0});
  RngStream run(37);
  const Eigen::VectorXd est = rtggm::impute(model, x, mask, 2, 4, run);
  REQUIRE(est.size() == 2);
  CHECK(est[0] == doctest::Approx(1.0 / (1.0 + std::exp(0.7))).epsilon(1e-14));
  CHECK(est[1] == doctest::Approx(1.0 / (1.0 + std::exp(-0.2))).epsilon(1e-14));
}

TEST_CASE("binary imputation approaches the enumerated posterior mean") {
  RngStream rng(41);
  const ModelParams model = oracle::random_model(Kind::Binary, 4, 2, rng, 0.6);
  const Eigen::VectorXd x = vec({1.0, 0.0, 0.0, 0.0});
  const ObservationMask mask = mask_of({1, 0, 0, 1});
  const ModelParams cond = rtggm::conditional_model(model, x, mask);

  // exact posterior mean of the two free coordinates by enumeration
  double z = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int v0 = 0; v0 <= 1; ++v0)
    for (int v1 = 0; v1 <= 1; ++v1) {
      const Eigen::VectorXd v = vec({double(v0), double(v1)});
      const double w = std::exp(rtggm::log_p_star(cond, v));
      z += w;
      mean += w * v;
    }
  mean /= z;

  RngStream run(4242);
  const Eigen::VectorXd est = rtggm::impute(model, x, mask, 500, 40000, run);
  CHECK(std::abs(est[0] - mean[0]) <= 0.015);
  CHECK(std::abs(est[1] - mean[1]) <= 0.015);
}

TEST_CASE("truncated-real imputation matches the quadrature posterior mean") {
  RngStream rng(47);
  const ModelParams model = oracle::random_model(Kind::TruncatedReal, 3, 1, rng, 0.5);
  const Eigen::VectorXd x = vec({0.8, 0.0, 1.6});
  const ObservationMask mask = mask_of({1, 0, 1});
  const ModelParams cond = rtggm::conditional_model(model, x, mask);

  const auto density = [&](double v) {
    return std::exp(rtggm::log_p_star(cond, vec({v})));
  };
  const double z = oracle::integrate(density, 0.0, 40.0, 1e-12);
  const double mean =
      oracle::integrate([&](double v) { return v * density(v); }, 0.0, 40.0, 1e-12) / z;

  RngStream run(5151);
  const Eigen::VectorXd est = rtggm::impute(model, x, mask, 500, 40000, run);
  REQUIRE(est.size() == 1);
  CHECK(std::abs(est[0] - mean) <= 0.02);
}

TEST_CASE("imputation is reproducible and validates its arguments") {
  RngStream rng(53);
  const ModelParams model = oracle::random_model(Kind::Binary, 4, 2, rng, 0.5);
  const Eigen::VectorXd x = vec({1.0, 0.0, 0.0, 1.0});
  const ObservationMask mask = mask_of({1, 0, 0, 1});

  RngStream r1(7), r2(7), r3(8);
  const Eigen::VectorXd e1 = rtggm::impute(model, x, mask, 10, 50, r1);
  const Eigen::VectorXd e2 = rtggm::impute(model, x, mask, 10, 50, r2);
  const Eigen::VectorXd e3 = rtggm::impute(model, x, mask, 10, 50, r3);
  CHECK(e1 == e2);
  CHECK(e1 != e3);

  RngStream r4(9);
  CHECK_THROWS_AS(rtggm::impute(model, x, mask, -1, 10, r4), std::invalid_argument);
  CHECK_THROWS_AS(rtggm::impute(model, x, mask, 0, 0, r4), std::invalid_argument);
}
