#include "rtggm/ais.hpp"

#include <cmath>
#include <stdexcept>

#include "parallel.hpp"
#include "rtggm/gibbs.hpp"

namespace rtggm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_ais_kind(Kind kind) {
  if (!(kind == Kind::Binary || kind == Kind::Count || kind == Kind::RggmBinary))
    throw std::invalid_argument(
        "annealed importance sampling is defined for binary, count, and "
        "rggm-binary models only");
}

// log of integral exp(-prec/2 h^2 + lin h) dh over [0,inf) (truncated) or R.
double gauss_normalizer(double prec, double lin, bool truncated) {
  double t = 0.5 * (kLog2Pi - std::log(prec)) + 0.5 * lin * lin / prec;
  if (truncated) t += std_normal_log_cdf(lin / std::sqrt(prec));
  return t;
}

// Intermediate log p* with the activation s = W'x + K c precomputed.
double intermediate_with_s(const ModelParams& model, const BaseRateModel& base,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                           double beta) {
  const bool truncated = kind_hidden_truncated(model.kind);
  double lp = (1.0 - beta) * base.b_a.dot(x) + beta * model.b.dot(x);
  for (Eigen::Index j = 0; j < model.m(); ++j) {
    if (beta < 1.0) lp += gauss_normalizer((1.0 - beta) * model.d[j], 0.0, truncated);
    if (beta > 0.0) lp += gauss_normalizer(beta * model.d[j], beta * s[j], truncated);
  }
  return lp;
}

void check_base(const BaseRateModel& base, const ModelParams& model) {
  if (base.b_a.size() != model.n())
    throw std::invalid_argument("base-rate bias length does not match model");
  if (!base.b_a.allFinite())
    throw std::invalid_argument("base-rate biases must be finite");
}

}  // namespace

double softplus(double t) {
  return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

BaseRateModel fit_base_rate(const DataBatch& data, double smoothing) {
  if (data.size() < 1) throw std::invalid_argument("fit_base_rate: empty data");
  if (smoothing < 0.0) throw std::invalid_argument("fit_base_rate: smoothing must be >= 0");
  BaseRateModel base;
  if (kind_is_binary(data.kind)) {
    for (Eigen::Index i = 0; i < data.size(); ++i)
      for (Eigen::Index j = 0; j < data.dim(); ++j)
        if (data.rows(i, j) != 0.0 && data.rows(i, j) != 1.0)
          throw std::invalid_argument("fit_base_rate: binary data must be 0/1");
    const Eigen::VectorXd p = data.rows.colwise().mean();
    base.b_a = ((p.array() + smoothing) / (1.0 - p.array() + smoothing)).log();
  } else if (data.kind == Kind::Count) {
    const Eigen::VectorXd totals = data.rows.colwise().sum();
    const double all = totals.sum();
    if (all <= 0.0) throw std::invalid_argument("fit_base_rate: no words in count data");
    base.b_a = ((totals.array() / all) + smoothing).log();
  } else {
    throw std::invalid_argument("fit_base_rate: needs binary or count data");
  }
  if (!base.b_a.allFinite())
    throw std::invalid_argument(
        "fit_base_rate: non-finite bias (columns with empty support need smoothing > 0)");
  return base;
}

ModelParams base_model(const BaseRateModel& base, const ModelParams& like) {
  require_ais_kind(like.kind);
  check_base(base, like);
  ModelParams a;
  a.kind = like.kind;
  a.W = Eigen::MatrixXd::Zero(like.n(), like.m());
  a.a = Eigen::VectorXd::Zero(like.n());
  a.d = like.d;
  a.b = base.b_a;
  a.c = Eigen::VectorXd::Zero(like.m());
  return a;
}

double log_z_base(const BaseRateModel& base, const ModelParams& model, long doc_len) {
  require_ais_kind(model.kind);
  check_base(base, model);
  double lz = 0.0;
  if (model.kind == Kind::Count) {
    if (doc_len < 0) throw std::invalid_argument("log_z_base: doc_len must be >= 0");
    std::vector<double> ba(base.b_a.data(), base.b_a.data() + base.b_a.size());
    lz += static_cast<double>(doc_len) * log_sum_exp(ba);
  } else {
    for (Eigen::Index i = 0; i < model.n(); ++i) lz += softplus(base.b_a[i]);
  }
  const bool truncated = kind_hidden_truncated(model.kind);
  for (Eigen::Index j = 0; j < model.m(); ++j)
    lz += gauss_normalizer(model.d[j], 0.0, truncated);
  return lz;
}

double intermediate_log_p_star(const ModelParams& model, const BaseRateModel& base,
                               const Eigen::VectorXd& x, double beta) {
  require_ais_kind(model.kind);
  check_base(base, model);
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("intermediate_log_p_star: beta must be in [0,1]");
  validate_visible(model, x);
  const double K = effective_doc_len(model, x);
  const Eigen::VectorXd s = model.W.transpose() * x + K * model.c;
  return intermediate_with_s(model, base, x, s, beta);
}

AISResult ais_run(const ModelParams& model, const BaseRateModel& base,
                  const AISConfig& cfg, RngStream& rng, long doc_len) {
  model.validate();
  require_ais_kind(model.kind);
  check_base(base, model);
  if (cfg.n_temps < 2) throw std::invalid_argument("ais_run: n_temps must be >= 2");
  if (cfg.n_chains < 1) throw std::invalid_argument("ais_run: n_chains must be >= 1");
  if (model.kind == Kind::Count && doc_len < 1)
    throw std::invalid_argument("ais_run: Count requires a document length >= 1");

  // Exact sampler for the base distribution A (factorized visible).
  VisibleConditional base_cond;
  base_cond.kind = model.kind;
  if (model.kind == Kind::Count) {
    const double mx = base.b_a.maxCoeff();
    Eigen::ArrayXd e = (base.b_a.array() - mx).exp();
    base_cond.loc = (e / e.sum()).matrix();
  } else {
    base_cond.loc = (1.0 / (1.0 + (-base.b_a.array()).exp())).matrix();
  }

  const long steps = cfg.n_temps - 1;
  const bool truncated = kind_hidden_truncated(model.kind);
  const Eigen::Index m = model.m();
  AISResult result;
  result.log_weights.assign(static_cast<std::size_t>(cfg.n_chains), 0.0);

  detail::run_chunked(cfg.n_chains, cfg.threads, [&](Eigen::Index lo, Eigen::Index hi, int) {
    Eigen::VectorXd hb(m), act;
    for (Eigen::Index chain = lo; chain < hi; ++chain) {
      RngStream stream = rng.child(static_cast<std::uint64_t>(chain));
      Eigen::VectorXd x = sample_visible(base_cond, stream, doc_len);
      const double K = effective_doc_len(model, x);
      double logw = 0.0;
      double beta_prev = 0.0;
      for (long k = 1; k <= steps; ++k) {
        const double beta = static_cast<double>(k) / static_cast<double>(steps);
        const Eigen::VectorXd s = model.W.transpose() * x + K * model.c;
        logw += intermediate_with_s(model, base, x, s, beta) -
                intermediate_with_s(model, base, x, s, beta_prev);
        beta_prev = beta;
        if (k == steps) break;  // beta = 1: the target's own kernel is not run
        // Transition under beta: h^A (decoupled from x), h^B, then x.
        for (Eigen::Index j = 0; j < m; ++j) {
          const double var_a = 1.0 / ((1.0 - beta) * model.d[j]);
          const double var_b = 1.0 / (beta * model.d[j]);
          const double mean_b = s[j] / model.d[j];
          if (truncated) {
            (void)sample_trunc({0.0, var_a}, stream);
            hb[j] = sample_trunc({mean_b, var_b}, stream);
          } else {
            (void)(std::sqrt(var_a) * stream.normal());
            hb[j] = mean_b + std::sqrt(var_b) * stream.normal();
          }
        }
        act = (1.0 - beta) * base.b_a + beta * (model.W * hb + model.b);
        VisibleConditional vc;
        vc.kind = model.kind;
        if (model.kind == Kind::Count) {
          const double mx = act.maxCoeff();
          Eigen::ArrayXd e = (act.array() - mx).exp();
          vc.loc = (e / e.sum()).matrix();
        } else {
          vc.loc = (1.0 / (1.0 + (-act.array()).exp())).matrix();
        }
        x = sample_visible(vc, stream, doc_len);
      }
      result.log_weights[static_cast<std::size_t>(chain)] = logw;
    }
  });

  const double lse = log_sum_exp(result.log_weights);
  const double log_mean_w = lse - std::log(static_cast<double>(cfg.n_chains));
  result.log_z = log_mean_w + log_z_base(base, model, doc_len);

  if (cfg.n_chains > 1) {
    // Delta method on the shift-invariant normalized weights.
    double shift = result.log_weights[0];
    for (double w : result.log_weights) shift = std::max(shift, w);
    double mean = 0.0;
    for (double w : result.log_weights) mean += std::exp(w - shift);
    mean /= static_cast<double>(cfg.n_chains);
    double var = 0.0;
    for (double w : result.log_weights) {
      const double dlt = std::exp(w - shift) - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(cfg.n_chains - 1);
    result.log_z_stderr = std::sqrt(var / static_cast<double>(cfg.n_chains)) / mean;
  }
  return result;
}

TestLogProb test_log_prob(const ModelParams& model, double log_z, const DataBatch& test) {
  if (!std::isfinite(log_z)) throw std::invalid_argument("test_log_prob: log_z must be finite");
  if (test.size() < 1) throw std::invalid_argument("test_log_prob: empty test set");
  TestLogProb out;
  out.per_example.resize(test.size());
  for (Eigen::Index i = 0; i < test.size(); ++i)
    out.per_example[i] = log_p_star(model, test.example(i)) - log_z;
  out.mean = out.per_example.mean();
  return out;
}

double perplexity(const ModelParams& model, const std::map<long, double>& log_z_per_len,
                  const DataBatch& docs) {
  if (model.kind != Kind::Count)
    throw std::invalid_argument("perplexity: defined for count models only");
  if (docs.size() < 1) throw std::invalid_argument("perplexity: empty test set");
  double total_logp = 0.0;
  double total_words = 0.0;
  for (Eigen::Index i = 0; i < docs.size(); ++i) {
    const Eigen::VectorXd x = docs.example(i);
    const long K = static_cast<long>(std::llround(x.sum()));
    const auto it = log_z_per_len.find(K);
    if (it == log_z_per_len.end())
      throw std::invalid_argument("perplexity: no log Z supplied for document length " +
                                  std::to_string(K));
    total_logp += log_p_star(model, x) - it->second;
    total_words += static_cast<double>(K);
  }
  if (total_words <= 0.0)
    throw std::invalid_argument("perplexity: test set contains no words");
  return std::exp(-total_logp / total_words);
}

}  // namespace rtggm
