#pragma once

#include <map>

#include "rtggm/data_io.hpp"
#include "rtggm/model.hpp"
#include "rtggm/rng.hpp"

namespace rtggm {

// Annealed-importance-sampling machinery for estimating the partition
// function of Binary, Count, and RggmBinary models. The annealing path runs
// from a factorized base distribution A (zero couplings, data-matched visible
// biases b_A, the target's hidden precisions) to the target model B.

struct BaseRateModel {
  Eigen::VectorXd b_a;  // visible biases of the base distribution
};

struct AISConfig {
  int n_temps = 100000;  // inverse temperatures, endpoints included:
                         // beta_k = k/(n_temps-1), so n_temps-1 weight ratios
  int n_chains = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct AISResult {
  std::vector<double> log_weights;  // one per chain
  double log_z = 0.0;               // log-mean-exp(log_weights) + log Z_A
  double log_z_stderr = 0.0;        // delta method; 0 when n_chains == 1
};

// Base-rate biases from data marginals. Binary-domain data:
// b_A_i = log((p_i + s) / (1 - p_i + s)) with p_i the empirical pixel mean.
// Count data: b_A_i = log(f_i + s) with f_i the empirical word frequency.
// Throws on empty data or when a bias comes out non-finite (smoothing 0 with
// a degenerate column).
BaseRateModel fit_base_rate(const DataBatch& data, double smoothing);

// The base model A as an explicit model: W = 0, c = 0, b = b_A, the target's
// d and kind (so log_p_star and exact_log_partition apply to it directly).
ModelParams base_model(const BaseRateModel& base, const ModelParams& like);

// Closed-form log Z_A. Binary kinds: sum_i softplus(b_A_i) plus the hidden
// normalizers; Count: doc_len * log(sum_i exp(b_A_i)) plus the same. Hidden
// normalizer per unit: -1/2 log d_j + log(1/2 sqrt(2 pi)) for truncated
// hiddens, without the 1/2 factor for RggmBinary.
double log_z_base(const BaseRateModel& base, const ModelParams& model, long doc_len = 0);

// Unnormalized log-density of the annealing family at inverse temperature
// beta, with both hidden blocks integrated out:
//   (1-beta) b_A'x + beta b'x
//   + sum_j [h^A normalizer at precision (1-beta) d_j]   (omitted at beta=1)
//   + sum_j [h^B normalizer, mean-shifted by s_j]        (omitted at beta=0)
// where s = W'x + K c. At the endpoints this is exactly the base/target
// log p*.
double intermediate_log_p_star(const ModelParams& model, const BaseRateModel& base,
                               const Eigen::VectorXd& x, double beta);

// Runs cfg.n_chains independent annealed chains (chain i on rng.child(i)) and
// combines the telescoped log-weights. Count models anneal documents of the
// fixed length doc_len (>= 1).
AISResult ais_run(const ModelParams& model, const BaseRateModel& base,
                  const AISConfig& cfg, RngStream& rng, long doc_len = 0);

struct TestLogProb {
  Eigen::VectorXd per_example;  // log p*(x) - log_z
  double mean = 0.0;
};

TestLogProb test_log_prob(const ModelParams& model, double log_z, const DataBatch& test);

// Per-word perplexity exp(-sum_d log p(X_d) / sum_d K_d). Each distinct
// document length needs its own log Z in the map (Z depends on K).
double perplexity(const ModelParams& model, const std::map<long, double>& log_z_per_len,
                  const DataBatch& docs);

// log(1 + e^t) without overflow.
double softplus(double t);

}  // namespace rtggm
