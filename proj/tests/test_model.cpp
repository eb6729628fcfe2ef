#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "rtggm/model.hpp"
#include "rtggm/rng.hpp"
#include "rtggm/truncnorm.hpp"

using rtggm::Kind;
using rtggm::ModelParams;
using rtggm::RngStream;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// n=2, m=1 truncated-real example with hand-computed energies.
ModelParams small_truncreal() {
  ModelParams m;
  m.kind = Kind::TruncatedReal;
  m.W = Eigen::MatrixXd(2, 1);
  m.W << 0.5, -0.25;
  m.a = vec({1.0, 2.0});
  m.d = vec({3.0});
  m.b = vec({0.1, -0.2});
  m.c = vec({0.3});
  return m;
}

// n=2, m=2 example shared by the binary and count cases (a unused).
ModelParams small_pair(Kind kind) {
  ModelParams m;
  m.kind = kind;
  m.W = Eigen::MatrixXd(2, 2);
  m.W << 0.5, -1.0, 0.25, 0.75;
  m.a = Eigen::VectorXd::Zero(2);
  m.d = vec({1.0, 2.0});
  m.b = vec({-0.3, 0.6});
  m.c = vec({0.2, -0.4});
  return m;
}

ModelParams zero_model(Kind kind, Eigen::Index n, Eigen::Index m) {
  ModelParams out;
  out.kind = kind;
  out.W = Eigen::MatrixXd::Zero(n, m);
  out.a = rtggm::kind_uses_a(kind) ? Eigen::VectorXd::Ones(n)
                                   : Eigen::VectorXd::Zero(n);
  out.d = Eigen::VectorXd::Ones(m);
  out.b = Eigen::VectorXd::Zero(n);
  out.c = Eigen::VectorXd::Zero(m);
  return out;
}

}  // namespace

TEST_CASE("energy matches hand-computed values") {
  // truncated-real: 0.5*(1+8) + 0.5*3*0.25 - 0 - (0.1-0.4) - 0.15
  CHECK(rtggm::energy(small_truncreal(), vec({1.0, 2.0}), vec({0.5})) ==
        doctest::Approx(5.025).epsilon(1e-14));
  // binary: 0.5*(0.09+2*0.49) + 0.55 + 0.3 + 0.22
  CHECK(rtggm::energy(small_pair(Kind::Binary), vec({1.0, 0.0}), vec({0.3, 0.7})) ==
        doctest::Approx(1.605).epsilon(1e-14));
  // count, K=3: 0.535 + 0.5 - 0 + 3*0.22
  CHECK(rtggm::energy(small_pair(Kind::Count), vec({2.0, 1.0}), vec({0.3, 0.7})) ==
        doctest::Approx(1.695).epsilon(1e-14));
}

TEST_CASE("effective document length is sum(x) only for count data") {
  CHECK(rtggm::effective_doc_len(small_pair(Kind::Count), vec({2.0, 1.0})) == 3.0);
  CHECK(rtggm::effective_doc_len(small_pair(Kind::Binary), vec({1.0, 1.0})) == 1.0);
  CHECK(rtggm::effective_doc_len(small_truncreal(), vec({1.0, 2.0})) == 1.0);
}

TEST_CASE("hidden conditional parameters and moments") {
  const ModelParams m = small_pair(Kind::Binary);
  const auto cond = rtggm::cond_hidden(m, vec({1.0, 0.0}));
  // s = W'x + c = (0.5+0.2, -1-0.4)
  REQUIRE(cond.size() == 2);
  CHECK(cond[0].xi == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(cond[0].lambda_sq == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cond[1].xi == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(cond[1].lambda_sq == doctest::Approx(0.5).epsilon(1e-15));

  const Eigen::VectorXd mu = rtggm::hidden_mean(m, vec({1.0, 0.0}));
  const Eigen::VectorXd m2 = rtggm::hidden_second_moment(m, vec({1.0, 0.0}));
  for (int j = 0; j < 2; ++j) {
    const auto ref = oracle::trunc_moments_quadrature(cond[j].xi, cond[j].lambda_sq);
    CHECK(mu[j] == doctest::Approx(ref.mean).epsilon(1e-10));
    CHECK(m2[j] == doctest::Approx(ref.var + ref.mean * ref.mean).epsilon(1e-10));
  }

  // count data scales the hidden bias by the document length
  const ModelParams mc = small_pair(Kind::Count);
  const auto cc = rtggm::cond_hidden(mc, vec({2.0, 1.0}));
  // s = W'(2,1) + 3c = (1.25+0.6, -1.25-1.2)
  CHECK(cc[0].xi == doctest::Approx(1.85).epsilon(1e-15));
  CHECK(cc[1].xi == doctest::Approx(-2.45 / 2.0).epsilon(1e-15));

  // untruncated baseline: plain normal moments
  const ModelParams mg = small_pair(Kind::RggmBinary);
  const Eigen::VectorXd mug = rtggm::hidden_mean(mg, vec({1.0, 0.0}));
  const Eigen::VectorXd m2g = rtggm::hidden_second_moment(mg, vec({1.0, 0.0}));
  CHECK(mug[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(mug[1] == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(m2g[0] == doctest::Approx(1.0 + 0.49).epsilon(1e-14));
  CHECK(m2g[1] == doctest::Approx(0.5 + 0.49).epsilon(1e-14));
}

TEST_CASE("visible conditional per kind") {
  const Eigen::VectorXd h = vec({0.3, 0.7});

  ModelParams mb = small_pair(Kind::Binary);
  // activation = W h + b; first unit: 0.15 - 0.7 - 0.3 = -0.85
  auto cb = rtggm::cond_visible(mb, h);
  CHECK(cb.loc[0] == doctest::Approx(1.0 / (1.0 + std::exp(0.85))).epsilon(1e-14));
  CHECK(cb.var.size() == 0);
  // pinned value: activation exactly 1 gives probability 0.73105857863000488
  ModelParams unit = zero_model(Kind::Binary, 1, 1);
  unit.b = vec({1.0});
  CHECK(rtggm::cond_visible(unit, vec({0.0})).loc[0] ==
        doctest::Approx(0.73105857863000488).epsilon(1e-14));

  ModelParams mr = small_pair(Kind::Real);
  mr.a = vec({1.5, 0.5});
  auto cr = rtggm::cond_visible(mr, h);
  const double act0 = 0.5 * 0.3 - 1.0 * 0.7 - 0.3;
  CHECK(cr.loc[0] == doctest::Approx(act0 / 1.5).epsilon(1e-13));
  CHECK(cr.var[0] == doctest::Approx(1.0 / 1.5).epsilon(1e-15));
  CHECK(cr.var[1] == doctest::Approx(2.0).epsilon(1e-15));

  // count: softmax over the vocabulary, sums to one
  ModelParams mc = small_pair(Kind::Count);
  auto cc = rtggm::cond_visible(mc, h);
  CHECK(cc.loc.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cc.loc.minCoeff() > 0.0);
  // softmax(act)_0 = 1/(1+exp(act1-act0))
  const double act1 = 0.25 * 0.3 + 0.75 * 0.7 + 0.6;
  CHECK(cc.loc[0] == doctest::Approx(1.0 / (1.0 + std::exp(act1 - act0))).epsilon(1e-13));

  // truncated-real: conditional mean applies the truncation
  ModelParams mt = small_pair(Kind::TruncatedReal);
  mt.a = vec({2.0, 1.0});
  auto ct = rtggm::cond_visible(mt, h);
  const Eigen::VectorXd mean = rtggm::visible_mean(ct);
  for (int i = 0; i < 2; ++i) {
    const auto ref = oracle::trunc_moments_quadrature(ct.loc[i], ct.var[i]);
    CHECK(mean[i] == doctest::Approx(ref.mean).epsilon(1e-10));
    CHECK(mean[i] > 0.0);
  }

  // count mean of a length-K document is K * probabilities
  const Eigen::VectorXd cmean = rtggm::visible_mean(cc, 7.0);
  CHECK(cmean.sum() == doctest::Approx(7.0).epsilon(1e-13));
}

TEST_CASE("log-marginal matches frozen closed-form pins") {
  ModelParams m = zero_model(Kind::Binary, 1, 1);
  m.W(0, 0) = 1.0;
  m.b = vec({0.3});
  m.c = vec({-0.2});
  m.d = vec({2.0});
  CHECK(rtggm::log_p_star(m, vec({1.0})) ==
        doctest::Approx(0.69576734697900328).epsilon(1e-13));
  CHECK(rtggm::log_p_star(m, vec({0.0})) ==
        doctest::Approx(-0.23008721137264082).epsilon(1e-13));

  m.kind = Kind::RggmBinary;
  CHECK(rtggm::log_p_star(m, vec({1.0})) ==
        doctest::Approx(1.0323649429247001).epsilon(1e-13));

  ModelParams t = zero_model(Kind::TruncatedReal, 1, 1);
  t.a = vec({1.5});
  t.W(0, 0) = 0.5;
  t.b = vec({0.2});
  t.c = vec({-0.1});
  CHECK(rtggm::log_p_star(t, vec({2.0})) ==
        doctest::Approx(-1.4794760765510742).epsilon(1e-13));
}

TEST_CASE("log-marginal matches hidden-domain quadrature for every kind") {
  RngStream rng(31);
  const Kind kinds[] = {Kind::TruncatedReal, Kind::Real, Kind::Binary, Kind::Count,
                        Kind::RggmBinary};
  for (Kind kind : kinds) {
    for (Eigen::Index m = 1; m <= 3; ++m) {
      ModelParams model = oracle::random_model(kind, 3, m, rng);
      for (int rep = 0; rep < 3; ++rep) {
        const Eigen::VectorXd x = oracle::random_visible(model, rng);
        const double lp = rtggm::log_p_star(model, x);
        const double ref = oracle::log_hidden_integral_quadrature(model, x);
        CAPTURE(static_cast<int>(kind));
        CAPTURE(m);
        CAPTURE(rep);
        CHECK(std::abs(lp - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST_CASE("exact partition matches frozen pins for zero-parameter models") {
  CHECK(rtggm::exact_log_partition(zero_model(Kind::Binary, 2, 1)) ==
        doctest::Approx(1.6120857137646181).epsilon(1e-14));
  CHECK(rtggm::exact_log_partition(zero_model(Kind::RggmBinary, 2, 1)) ==
        doctest::Approx(2.3052328943245634).epsilon(1e-14));
  CHECK(rtggm::exact_log_partition(zero_model(Kind::Binary, 3, 2)) ==
        doctest::Approx(2.5310242469692908).epsilon(1e-14));
  CHECK(rtggm::exact_log_partition(zero_model(Kind::Count, 2, 1), 2) ==
        doctest::Approx(1.6120857137646181).epsilon(1e-14));
}

TEST_CASE("exact partition matches independent quadrature enumeration") {
  RngStream rng(57);

  // Binary: sum over the four visible states of the quadrature marginal.
  ModelParams mb = oracle::random_model(Kind::Binary, 2, 2, rng);
  std::vector<double> terms;
  for (int bits = 0; bits < 4; ++bits) {
    const Eigen::VectorXd x = vec({static_cast<double>(bits & 1),
                                   static_cast<double>((bits >> 1) & 1)});
    terms.push_back(oracle::log_hidden_integral_quadrature(mb, x));
  }
  CHECK(rtggm::exact_log_partition(mb) ==
        doctest::Approx(rtggm::log_sum_exp(terms)).epsilon(1e-8));

  // Count, n=2, K=2: enumerate the 4 ordered word sequences directly.
  ModelParams mc = oracle::random_model(Kind::Count, 2, 1, rng);
  terms.clear();
  for (int w1 = 0; w1 < 2; ++w1)
    for (int w2 = 0; w2 < 2; ++w2) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
      x[w1] += 1.0;
      x[w2] += 1.0;
      terms.push_back(oracle::log_hidden_integral_quadrature(mc, x));
    }
  CHECK(rtggm::exact_log_partition(mc, 2) ==
        doctest::Approx(rtggm::log_sum_exp(terms)).epsilon(1e-8));

  // RggmBinary baseline with nonzero parameters.
  ModelParams mg = oracle::random_model(Kind::RggmBinary, 2, 1, rng);
  terms.clear();
  for (int bits = 0; bits < 4; ++bits) {
    const Eigen::VectorXd x = vec({static_cast<double>(bits & 1),
                                   static_cast<double>((bits >> 1) & 1)});
    terms.push_back(oracle::log_hidden_integral_quadrature(mg, x));
  }
  CHECK(rtggm::exact_log_partition(mg) ==
        doctest::Approx(rtggm::log_sum_exp(terms)).epsilon(1e-8));
}

TEST_CASE("exact partition rejects unusable inputs") {
  CHECK_THROWS_AS(rtggm::exact_log_partition(zero_model(Kind::Real, 2, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(rtggm::exact_log_partition(zero_model(Kind::TruncatedReal, 2, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(rtggm::exact_log_partition(zero_model(Kind::Binary, 21, 1)),
                  std::invalid_argument);
  // n^doc_len over the cap
  CHECK_THROWS_AS(rtggm::exact_log_partition(zero_model(Kind::Count, 10, 1), 7),
                  std::invalid_argument);
}

TEST_CASE("hidden moments are consistent with the log-marginal derivatives") {
  // d(log p*)/dc_j = K * E[h_j | x]   and   d(log p*)/dd_j = -E[h_j^2 | x]/2.
  RngStream rng(73);
  const Kind kinds[] = {Kind::TruncatedReal, Kind::Real, Kind::Binary, Kind::Count,
                        Kind::RggmBinary};
  for (Kind kind : kinds) {
    for (int rep = 0; rep < 2; ++rep) {
      const ModelParams model = oracle::random_model(kind, 3, 2, rng);
      const Eigen::VectorXd x = oracle::random_visible(model, rng);
      const double K = rtggm::effective_doc_len(model, x);
      const Eigen::VectorXd mu = rtggm::hidden_mean(model, x);
      const Eigen::VectorXd m2 = rtggm::hidden_second_moment(model, x);
      for (Eigen::Index j = 0; j < model.m(); ++j) {
        const double dc = oracle::central_diff(
            [&](double v) {
              ModelParams pert = model;
              pert.c[j] = v;
              return rtggm::log_p_star(pert, x);
            },
            model.c[j]);
        const double dd = oracle::central_diff(
            [&](double v) {
              ModelParams pert = model;
              pert.d[j] = v;
              return rtggm::log_p_star(pert, x);
            },
            model.d[j]);
        CAPTURE(static_cast<int>(kind));
        CAPTURE(rep);
        CAPTURE(j);
        CHECK(dc == doctest::Approx(K * mu[j]).epsilon(2e-6));
        CHECK(dd == doctest::Approx(-0.5 * m2[j]).epsilon(2e-6));
      }
    }
  }
}

TEST_CASE("precision matrix layout and positive definiteness") {
  ModelParams m = zero_model(Kind::Real, 2, 1);
  m.W(0, 0) = 0.9;
  const Eigen::MatrixXd p = rtggm::precision_matrix(m);
  REQUIRE(p.rows() == 3);
  REQUIRE(p.cols() == 3);
  CHECK(p(0, 0) == 1.0);
  CHECK(p(1, 1) == 1.0);
  CHECK(p(2, 2) == 1.0);
  CHECK(p(0, 2) == -0.9);
  CHECK(p(2, 0) == -0.9);
  CHECK(p(0, 1) == 0.0);
  CHECK(p == p.transpose());
  // Schur complement 1 - 0.81 > 0: jointly positive definite.
  CHECK(rtggm::is_positive_definite(p));
  m.W(0, 0) = 1.1;  // 1 - 1.21 < 0: not positive definite
  CHECK_FALSE(rtggm::is_positive_definite(rtggm::precision_matrix(m)));
}

TEST_CASE("log-sum-exp handles extremes") {
  CHECK(rtggm::log_sum_exp({std::log(1.0), std::log(2.0)}) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(rtggm::log_sum_exp({1000.0, 1000.0}) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(rtggm::log_sum_exp({-std::numeric_limits<double>::infinity(), 0.0}) == 0.0);
  CHECK(rtggm::log_sum_exp({}) == -std::numeric_limits<double>::infinity());
  CHECK(rtggm::log_sum_exp({-1e308, -1e308}) > -std::numeric_limits<double>::infinity());
}

TEST_CASE("validation rejects malformed models and out-of-domain states") {
  ModelParams m = small_pair(Kind::Binary);
  CHECK_NOTHROW(m.validate());

  ModelParams bad = m;
  bad.d[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = m;
  bad.d[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = m;
  bad.b = vec({1.0});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = m;
  bad.W(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  ModelParams t = small_truncreal();
  CHECK_NOTHROW(t.validate());
  t.a[0] = 0.0;  // kinds with a visible precision require it positive
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);

  CHECK_THROWS_AS(rtggm::validate_visible(m, vec({0.5, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(rtggm::validate_visible(m, vec({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(rtggm::validate_visible(small_truncreal(), vec({-0.1, 0.0})),
                  std::invalid_argument);
  ModelParams c = small_pair(Kind::Count);
  CHECK_THROWS_AS(rtggm::validate_visible(c, vec({1.5, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(rtggm::validate_visible(c, vec({-1.0, 0.0})), std::invalid_argument);
  CHECK_NOTHROW(rtggm::validate_visible(c, vec({0.0, 0.0})));

  // hidden domain: negative h rejected for truncated kinds, fine for the baseline
  CHECK_THROWS_AS(rtggm::energy(m, vec({1.0, 0.0}), vec({-0.1, 0.0})),
                  std::invalid_argument);
  CHECK_NOTHROW(rtggm::energy(small_pair(Kind::RggmBinary), vec({1.0, 0.0}),
                              vec({-0.1, 0.0})));
}

TEST_CASE("deep model validation enforces stacking rules") {
  rtggm::DeepModel deep;
  CHECK_THROWS_AS(deep.validate(), std::invalid_argument);

  deep.layers.push_back(small_pair(Kind::Binary));  // n=2, m=2
  ModelParams upper = zero_model(Kind::TruncatedReal, 2, 1);
  deep.layers.push_back(upper);
  CHECK_NOTHROW(deep.validate());

  deep.layers[1].kind = Kind::Binary;  // upper blocks must be truncated-real
  CHECK_THROWS_AS(deep.validate(), std::invalid_argument);
  deep.layers[1].kind = Kind::TruncatedReal;

  deep.layers[1] = zero_model(Kind::TruncatedReal, 3, 1);  // width mismatch
  CHECK_THROWS_AS(deep.validate(), std::invalid_argument);
}
