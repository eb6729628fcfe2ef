#include "rtggm/gibbs.hpp"

#include <cmath>
#include <stdexcept>

namespace rtggm {

namespace {

long count_words(const Eigen::VectorXd& x) {
  return static_cast<long>(std::llround(x.sum()));
}

// Draw one word index from categorical probabilities by inverse-CDF walk.
Eigen::Index draw_word(const Eigen::VectorXd& probs, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;  // guard against rounding in the cumulative sum
}

// Internal chain that carries its states by reference and keeps the Count
// document length fixed across sweeps.
void sweep(const ModelParams& model, Eigen::VectorXd& x, Eigen::VectorXd& h,
           RngStream& rng) {
  h = sample_hidden(model, x, rng);
  const long K = model.kind == Kind::Count ? count_words(x) : 1;
  x = sample_visible(cond_visible(model, h), rng, K);
}

}  // namespace

Eigen::VectorXd sample_hidden(const ModelParams& model, const Eigen::VectorXd& x,
                              RngStream& rng) {
  const auto cond = cond_hidden(model, x);
  Eigen::VectorXd h(model.m());
  if (kind_hidden_truncated(model.kind)) {
    for (Eigen::Index j = 0; j < model.m(); ++j)
      h[j] = sample_trunc(cond[static_cast<std::size_t>(j)], rng);
  } else {
    for (Eigen::Index j = 0; j < model.m(); ++j) {
      const auto& p = cond[static_cast<std::size_t>(j)];
      h[j] = p.xi + std::sqrt(p.lambda_sq) * rng.normal();
    }
  }
  return h;
}

Eigen::VectorXd sample_visible(const VisibleConditional& cond, RngStream& rng,
                               long doc_len) {
  const Eigen::Index n = cond.loc.size();
  Eigen::VectorXd x(n);
  switch (cond.kind) {
    case Kind::TruncatedReal:
      for (Eigen::Index i = 0; i < n; ++i)
        x[i] = sample_trunc({cond.loc[i], cond.var[i]}, rng);
      return x;
    case Kind::Real:
      for (Eigen::Index i = 0; i < n; ++i)
        x[i] = cond.loc[i] + std::sqrt(cond.var[i]) * rng.normal();
      return x;
    case Kind::Binary:
    case Kind::RggmBinary:
      for (Eigen::Index i = 0; i < n; ++i)
        x[i] = rng.uniform() < cond.loc[i] ? 1.0 : 0.0;
      return x;
    case Kind::Count: {
      if (doc_len < 0)
        throw std::invalid_argument("sample_visible: count doc_len must be >= 0");
      x.setZero();
      for (long w = 0; w < doc_len; ++w) x[draw_word(cond.loc, rng)] += 1.0;
      return x;
    }
  }
  throw std::logic_error("unreachable");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gibbs_step(const ModelParams& model,
                                                       const Eigen::VectorXd& x,
                                                       RngStream& rng) {
  validate_visible(model, x);
  Eigen::VectorXd xc = x, h;
  sweep(model, xc, h, rng);
  return {h, xc};
}

ChainState run_chain(const ModelParams& model, const Eigen::VectorXd& x0, long k,
                     RngStream& rng) {
  if (k < 1) throw std::invalid_argument("run_chain: k must be >= 1");
  validate_visible(model, x0);
  ChainState st;
  st.x = x0;
  for (long i = 0; i < k; ++i) {
    sweep(model, st.x, st.h, rng);
    ++st.steps;
  }
  return st;
}

Eigen::VectorXd initial_visible_state(const ModelParams& model, RngStream& rng,
                                      long count_doc_len) {
  const Eigen::Index n = model.n();
  Eigen::VectorXd x(n);
  switch (model.kind) {
    case Kind::TruncatedReal:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.exponential();
      return x;
    case Kind::Real:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
      return x;
    case Kind::Binary:
    case Kind::RggmBinary:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
      return x;
    case Kind::Count: {
      if (count_doc_len < 1)
        throw std::invalid_argument(
            "initial_visible_state: Count requires a document length >= 1");
      x.setZero();
      for (long w = 0; w < count_doc_len; ++w)
        x[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))] += 1.0;
      return x;
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

// Shared emission loop over the top-level chain of `model`. emit(x, h) is
// called exactly n_samples times.
template <typename Emit>
void chain_emissions(const ModelParams& model, long burn_in, int n_samples,
                     long thin, RngStream& rng, long count_doc_len, Emit&& emit) {
  if (burn_in < 0) throw std::invalid_argument("generate: burn_in must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("generate: n_samples must be >= 1");
  if (thin < 1) throw std::invalid_argument("generate: thin must be >= 1");
  Eigen::VectorXd x = initial_visible_state(model, rng, count_doc_len);
  Eigen::VectorXd h;
  for (long i = 0; i < burn_in; ++i) sweep(model, x, h, rng);
  if (h.size() == 0) h = sample_hidden(model, x, rng);  // burn_in == 0 only
  emit(x, h);
  for (int s = 1; s < n_samples; ++s) {
    for (long i = 0; i < thin; ++i) sweep(model, x, h, rng);
    emit(x, h);
  }
}

}  // namespace

std::vector<GeneratedSample> generate(const ModelParams& model, long burn_in,
                                      int n_samples, long thin, RngStream& rng,
                                      long count_doc_len) {
  model.validate();
  std::vector<GeneratedSample> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  const double K = model.kind == Kind::Count ? static_cast<double>(count_doc_len) : 1.0;
  chain_emissions(model, burn_in, n_samples, thin, rng, count_doc_len,
                  [&](const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
                    out.push_back({x, visible_mean(cond_visible(model, h), K)});
                  });
  return out;
}

std::vector<GeneratedSample> generate_deep(const DeepModel& deep, long burn_in,
                                           int n_samples, RngStream& rng,
                                           long count_doc_len, long thin) {
  deep.validate();
  if (deep.layers[0].kind == Kind::Count && count_doc_len < 1)
    throw std::invalid_argument("generate_deep: Count requires a document length >= 1");
  const ModelParams& top = deep.layers.back();
  // The top chain runs in the top block's own visible domain; for a
  // single-block stack that domain is the data domain and may be Count.
  const long top_doc_len = deep.layers.size() == 1 ? count_doc_len : 0;
  std::vector<GeneratedSample> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  chain_emissions(
      top, burn_in, n_samples, thin, rng, top_doc_len,
      [&](const Eigen::VectorXd& x_top, const Eigen::VectorXd& h_top) {
        if (deep.layers.size() == 1) {
          out.push_back({x_top, visible_mean(cond_visible(top, h_top),
                                             static_cast<double>(count_doc_len))});
          return;
        }
        // Ancestral pass: x_top is the hidden state of the block below the
        // top block; sample downward through the visible conditionals.
        Eigen::VectorXd v = x_top;
        for (std::size_t l = deep.layers.size() - 1; l-- > 1;)
          v = sample_visible(cond_visible(deep.layers[l], v), rng, 1);
        const VisibleConditional bottom = cond_visible(deep.layers[0], v);
        const double K = deep.layers[0].kind == Kind::Count
                             ? static_cast<double>(count_doc_len)
                             : 1.0;
        out.push_back({sample_visible(bottom, rng, static_cast<long>(K)),
                       visible_mean(bottom, K)});
      });
  return out;
}

}  // namespace rtggm
