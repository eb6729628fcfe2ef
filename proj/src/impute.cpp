#include "rtggm/impute.hpp"

#include <stdexcept>

#include "rtggm/gibbs.hpp"

namespace rtggm {

Eigen::Index ObservationMask::n_observed() const {
  Eigen::Index k = 0;
  for (bool o : observed)
    if (o) ++k;
  return k;
}

void ObservationMask::validate(Eigen::Index n) const {
  if (size() != n)
    throw std::invalid_argument("observation mask length does not match model");
  const Eigen::Index obs = n_observed();
  if (obs == 0) throw std::invalid_argument("observation mask observes nothing");
  if (obs == n) throw std::invalid_argument("observation mask leaves nothing to impute");
}

ModelParams conditional_model(const ModelParams& model, const Eigen::VectorXd& x,
                              const ObservationMask& mask) {
  model.validate();
  if (model.kind == Kind::Count)
    throw std::invalid_argument("conditional_model: not defined for count models");
  mask.validate(model.n());
  if (x.size() != model.n())
    throw std::invalid_argument("conditional_model: x must be full length");

  const Eigen::Index n_u = mask.n_unobserved();
  ModelParams cond;
  cond.kind = model.kind;
  cond.W.resize(n_u, model.m());
  cond.a.resize(n_u);
  cond.b.resize(n_u);
  cond.d = model.d;
  Eigen::VectorXd c_shift = Eigen::VectorXd::Zero(model.m());
  Eigen::Index u = 0;
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    if (mask.observed[static_cast<std::size_t>(i)]) {
      if (!std::isfinite(x[i]))
        throw std::invalid_argument("conditional_model: observed value not finite");
      c_shift += x[i] * model.W.row(i).transpose();
    } else {
      cond.W.row(u) = model.W.row(i);
      cond.a[u] = model.a[i];
      cond.b[u] = model.b[i];
      ++u;
    }
  }
  cond.c = model.c + c_shift;
  // Domain-check the observed values against the kind (0/1, >= 0, ...) by
  // validating the full vector with unobserved slots filled in-domain.
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < model.n(); ++i)
    if (!mask.observed[static_cast<std::size_t>(i)]) probe[i] = 0.0;
  validate_visible(model, probe);
  return cond;
}

Eigen::VectorXd impute(const ModelParams& model, const Eigen::VectorXd& x,
                       const ObservationMask& mask, long burn_in, long n_samples,
                       RngStream& rng) {
  if (burn_in < 0) throw std::invalid_argument("impute: burn_in must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("impute: n_samples must be >= 1");
  const ModelParams cond = conditional_model(model, x, mask);

  Eigen::VectorXd xu = initial_visible_state(cond, rng);
  Eigen::VectorXd h;
  Eigen::VectorXd estimate = Eigen::VectorXd::Zero(cond.n());
  for (long t = 0; t < burn_in + n_samples; ++t) {
    h = sample_hidden(cond, xu, rng);
    const VisibleConditional vc = cond_visible(cond, h);
    if (t >= burn_in) estimate += visible_mean(vc);
    xu = sample_visible(vc, rng);
  }
  return estimate / static_cast<double>(n_samples);
}

}  // namespace rtggm
