#pragma once

#include <utility>
#include <vector>

#include "rtggm/model.hpp"
#include "rtggm/rng.hpp"

namespace rtggm {

// One exact draw from the hidden conditional p(h | x).
Eigen::VectorXd sample_hidden(const ModelParams& model, const Eigen::VectorXd& x,
                              RngStream& rng);

// One exact draw from a visible conditional. Count draws doc_len words
// sequentially from the categorical distribution; doc_len is ignored for
// other kinds.
Eigen::VectorXd sample_visible(const VisibleConditional& cond, RngStream& rng,
                               long doc_len = 1);

// One block-Gibbs sweep: h ~ p(h|x), then x' ~ p(x|h). Returns (h, x').
// For Count the document length of x is preserved in x'.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gibbs_step(const ModelParams& model,
                                                       const Eigen::VectorXd& x,
                                                       RngStream& rng);

struct ChainState {
  Eigen::VectorXd x;
  Eigen::VectorXd h;
  long steps = 0;
};

// k >= 1 full sweeps starting from x0; returns the final visible and hidden
// states and the sweep count.
ChainState run_chain(const ModelParams& model, const Eigen::VectorXd& x0, long k,
                     RngStream& rng);

// A drawn visible state together with the mean of the conditional it was
// drawn from (for Binary that mean is the per-pixel Bernoulli probability).
struct GeneratedSample {
  Eigen::VectorXd sample;
  Eigen::VectorXd mean;
};

// Random initial visible state for a fresh chain (Count: doc_len uniform
// words; required >= 1 for Count, ignored otherwise).
Eigen::VectorXd initial_visible_state(const ModelParams& model, RngStream& rng,
                                      long count_doc_len = 0);

// burn_in sweeps from a random initial state, then n_samples emissions with
// thin sweeps between consecutive emissions ((n_samples-1)*thin sweeps after
// burn-in in total).
std::vector<GeneratedSample> generate(const ModelParams& model, long burn_in,
                                      int n_samples, long thin, RngStream& rng,
                                      long count_doc_len = 0);

// Deep generation: block-Gibbs over the top block, then ancestral sampling
// down through the lower blocks. A single-block stack reproduces generate()
// draw for draw.
std::vector<GeneratedSample> generate_deep(const DeepModel& deep, long burn_in,
                                           int n_samples, RngStream& rng,
                                           long count_doc_len = 0, long thin = 1);

}  // namespace rtggm
