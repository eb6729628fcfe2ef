#pragma once

#include <optional>
#include <vector>

#include "rtggm/data_io.hpp"
#include "rtggm/gibbs.hpp"
#include "rtggm/model.hpp"
#include "rtggm/rng.hpp"

namespace rtggm {

// Log-likelihood ascent direction. da is empty for kinds without a visible
// precision vector; dd is ignored by the updater when d is frozen.
struct Gradient {
  Eigen::MatrixXd dW;
  Eigen::VectorXd da, dd, db, dc;

  static Gradient zeros_like(const ModelParams& model);
  void add_scaled(const Gradient& g, double scale);
};

struct TrainConfig {
  int cd_k = 25;                   // Gibbs sweeps per contrastive update
  double learning_rate = 1e-4;
  double rmsprop_decay = 0.95;
  double rmsprop_epsilon = 1e-8;
  int batch_size = 100;
  int epochs = 10;
  std::uint64_t seed = 0;
  std::optional<double> fix_d;     // freeze every hidden precision at this value
  double precision_floor = 1e-3;   // lower clip for learned a and d
  int threads = 1;                 // worker threads for per-datum chains
};

// Accumulated second moments for the RMSprop-scaled ascent step.
struct RmspropState {
  Eigen::MatrixXd W;
  Eigen::VectorXd a, d, b, c;

  static RmspropState zeros_like(const ModelParams& model);
};

// Fresh model: W ~ N(0, 0.01^2) from `seed`, b = c = 0, a = 1 where used
// (0 otherwise), d = 5 for Binary and 1 for every other kind.
ModelParams init_model(Eigen::Index n, Eigen::Index m, Kind kind, std::uint64_t seed);

// Contrastive-divergence gradient for a single example: the chain runs cd_k
// sweeps from x, and both phases use conditional hidden moments rather than
// sampled hidden states.
Gradient cd_gradient_datum(const ModelParams& model, const Eigen::VectorXd& x,
                           int cd_k, RngStream rng);

// Batch-mean CD gradient. Example i uses substream rng.child(i), so the
// result is reproducible and (up to summation order) independent of the
// thread count.
Gradient cd_gradient(const ModelParams& model, const std::vector<Eigen::VectorXd>& batch,
                     int cd_k, RngStream& rng, int threads = 1);

// In-place RMSprop ascent step:
//   ms <- decay*ms + (1-decay)*g^2;  theta <- theta + lr * g / (sqrt(ms)+eps)
// then a and d are clipped from below at precision_floor; when cfg.fix_d is
// set, d (and its accumulator) is left untouched.
void rmsprop_update(ModelParams& model, const Gradient& g, RmspropState& ms,
                    const TrainConfig& cfg);

struct EpochMetrics {
  int epoch = 0;                      // 1-based
  double recon_error = 0.0;           // mean squared reconstruction error
  std::optional<double> exact_loglik; // mean exact test log-likelihood, when enumerable
  double wall_seconds = 0.0;
};

// Mean over the batch of |x - E[x | E[h|x]]|^2 / n.
double reconstruction_error(const ModelParams& model, const DataBatch& data);

// Mean exact log-likelihood of `data` (log p*(x) - log Z), or nullopt when
// the partition function is not enumerable at this size.
std::optional<double> exact_mean_loglik(const ModelParams& model, const DataBatch& data);

// CD training with RMSprop on shuffled minibatches. Returns one metrics row
// per epoch; exact_loglik is filled from `eval` when that set is given and
// the model is small enough to enumerate. Count examples with zero words are
// skipped (with a warning on stderr).
std::vector<EpochMetrics> train(ModelParams& model, const DataBatch& data,
                                const TrainConfig& cfg, const DataBatch* eval = nullptr);

// Greedy layer-wise stack: the bottom block is trained on the data, then
// each example is replaced by its conditional hidden mean and the next block
// (truncated-real visible) is trained on those features, and so on. All
// blocks share cfg; per_layer (optional) receives each block's metrics.
DeepModel train_deep(const std::vector<Eigen::Index>& hidden_widths, const DataBatch& data,
                     const TrainConfig& cfg,
                     std::vector<std::vector<EpochMetrics>>* per_layer = nullptr);

// Feed-forward rectifier initialization maps from a trained stack: layer l
// gets weight W_l' row-scaled by 1/d_l and bias c_l/d_l, so that
// relu(weight*x + bias) approximates the block's conditional hidden mean.
ReluInit relu_init_maps(const DeepModel& deep);

// Writes relu_init_maps(deep) as a rectifier-init checkpoint record.
void export_relu_init(const DeepModel& deep, const std::string& path);

}  // namespace rtggm
