#include "rtggm/train.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>

#include "parallel.hpp"

namespace rtggm {

namespace {

using detail::run_chunked;

double doc_len_of(const ModelParams& model, const Eigen::VectorXd& x) {
  return model.kind == Kind::Count ? x.sum() : 1.0;
}

}  // namespace

Gradient Gradient::zeros_like(const ModelParams& model) {
  Gradient g;
  g.dW = Eigen::MatrixXd::Zero(model.n(), model.m());
  g.da = kind_uses_a(model.kind) ? Eigen::VectorXd::Zero(model.n()) : Eigen::VectorXd();
  g.dd = Eigen::VectorXd::Zero(model.m());
  g.db = Eigen::VectorXd::Zero(model.n());
  g.dc = Eigen::VectorXd::Zero(model.m());
  return g;
}

void Gradient::add_scaled(const Gradient& g, double scale) {
  dW += scale * g.dW;
  if (da.size() > 0) da += scale * g.da;
  dd += scale * g.dd;
  db += scale * g.db;
  dc += scale * g.dc;
}

RmspropState RmspropState::zeros_like(const ModelParams& model) {
  RmspropState s;
  s.W = Eigen::MatrixXd::Zero(model.n(), model.m());
  s.a = Eigen::VectorXd::Zero(model.n());
  s.d = Eigen::VectorXd::Zero(model.m());
  s.b = Eigen::VectorXd::Zero(model.n());
  s.c = Eigen::VectorXd::Zero(model.m());
  return s;
}

ModelParams init_model(Eigen::Index n, Eigen::Index m, Kind kind, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("init_model: dimensions must be >= 1");
  ModelParams model;
  model.kind = kind;
  RngStream rng(seed);
  model.W.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) model.W(i, j) = 0.01 * rng.normal();
  model.a = kind_uses_a(kind) ? Eigen::VectorXd::Ones(n) : Eigen::VectorXd::Zero(n);
  model.d = Eigen::VectorXd::Constant(m, kind == Kind::Binary ? 5.0 : 1.0);
  model.b = Eigen::VectorXd::Zero(n);
  model.c = Eigen::VectorXd::Zero(m);
  return model;
}

Gradient cd_gradient_datum(const ModelParams& model, const Eigen::VectorXd& x,
                           int cd_k, RngStream rng) {
  if (cd_k < 1) throw std::invalid_argument("cd_gradient: cd_k must be >= 1");
  const double K = doc_len_of(model, x);
  const Eigen::VectorXd mu0 = hidden_mean(model, x);
  const Eigen::VectorXd m2_0 = hidden_second_moment(model, x);
  const ChainState chain = run_chain(model, x, cd_k, rng);
  const Eigen::VectorXd muk = hidden_mean(model, chain.x);
  const Eigen::VectorXd m2_k = hidden_second_moment(model, chain.x);

  Gradient g;
  g.dW = x * mu0.transpose() - chain.x * muk.transpose();
  g.db = x - chain.x;
  g.dc = K * (mu0 - muk);
  g.dd = 0.5 * (m2_k - m2_0);
  if (kind_uses_a(model.kind))
    g.da = 0.5 * (chain.x.array().square() - x.array().square()).matrix();
  return g;
}

Gradient cd_gradient(const ModelParams& model, const std::vector<Eigen::VectorXd>& batch,
                     int cd_k, RngStream& rng, int threads) {
  if (batch.empty()) throw std::invalid_argument("cd_gradient: empty batch");
  const auto total = static_cast<Eigen::Index>(batch.size());
  const int t = std::max(1, threads);
  std::vector<Gradient> partial(
      static_cast<std::size_t>(std::min<Eigen::Index>(t, total)),
      Gradient::zeros_like(model));
  run_chunked(total, t, [&](Eigen::Index begin, Eigen::Index end, int slot) {
    for (Eigen::Index i = begin; i < end; ++i)
      partial[static_cast<std::size_t>(slot)].add_scaled(
          cd_gradient_datum(model, batch[static_cast<std::size_t>(i)], cd_k,
                            rng.child(static_cast<std::uint64_t>(i))),
          1.0);
  });
  Gradient g = Gradient::zeros_like(model);
  for (const auto& p : partial) g.add_scaled(p, 1.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  g.dW *= inv;
  if (g.da.size() > 0) g.da *= inv;
  g.dd *= inv;
  g.db *= inv;
  g.dc *= inv;
  return g;
}

namespace {

void rmsprop_axpy(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::VectorXd& g,
                  Eigen::Ref<Eigen::VectorXd> ms, const TrainConfig& cfg) {
  ms = cfg.rmsprop_decay * ms + (1.0 - cfg.rmsprop_decay) * g.array().square().matrix();
  theta += (cfg.learning_rate * g.array() / (ms.array().sqrt() + cfg.rmsprop_epsilon))
               .matrix();
}

}  // namespace

void rmsprop_update(ModelParams& model, const Gradient& g, RmspropState& ms,
                    const TrainConfig& cfg) {
  // W, flattened through Map to reuse the vector step
  Eigen::Map<Eigen::VectorXd> wflat(model.W.data(), model.W.size());
  Eigen::Map<Eigen::VectorXd> mswflat(ms.W.data(), ms.W.size());
  Eigen::Map<const Eigen::VectorXd> gwflat(g.dW.data(), g.dW.size());
  rmsprop_axpy(wflat, gwflat, mswflat, cfg);
  rmsprop_axpy(model.b, g.db, ms.b, cfg);
  rmsprop_axpy(model.c, g.dc, ms.c, cfg);
  if (kind_uses_a(model.kind)) {
    rmsprop_axpy(model.a, g.da, ms.a, cfg);
    model.a = model.a.cwiseMax(cfg.precision_floor);
  }
  if (cfg.fix_d) {
    model.d.setConstant(*cfg.fix_d);  // frozen: no gradient, no accumulator
  } else {
    rmsprop_axpy(model.d, g.dd, ms.d, cfg);
    model.d = model.d.cwiseMax(cfg.precision_floor);
  }
}

double reconstruction_error(const ModelParams& model, const DataBatch& data) {
  if (data.size() < 1) throw std::invalid_argument("reconstruction_error: empty data");
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.example(i);
    const Eigen::VectorXd mu_h = hidden_mean(model, x);
    const Eigen::VectorXd xhat =
        visible_mean(cond_visible(model, mu_h), doc_len_of(model, x));
    total += (x - xhat).squaredNorm() / static_cast<double>(model.n());
  }
  return total / static_cast<double>(data.size());
}

std::optional<double> exact_mean_loglik(const ModelParams& model, const DataBatch& data) {
  if (data.size() < 1) return std::nullopt;
  if (kind_is_binary(model.kind)) {
    if (model.n() > 20) return std::nullopt;
    const double log_z = exact_log_partition(model);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i)
      mean += log_p_star(model, data.example(i)) - log_z;
    return mean / static_cast<double>(data.size());
  }
  if (model.kind == Kind::Count) {
    std::map<int, double> z_by_len;
    double mean = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const Eigen::VectorXd x = data.example(i);
      const int K = static_cast<int>(std::llround(x.sum()));
      if (std::pow(static_cast<double>(model.n()), K) > 1e6) return std::nullopt;
      auto it = z_by_len.find(K);
      if (it == z_by_len.end())
        it = z_by_len.emplace(K, exact_log_partition(model, K)).first;
      mean += log_p_star(model, x) - it->second;
    }
    return mean / static_cast<double>(data.size());
  }
  return std::nullopt;
}

std::vector<EpochMetrics> train(ModelParams& model, const DataBatch& data,
                                const TrainConfig& cfg, const DataBatch* eval) {
  model.validate();
  if (data.dim() != model.n())
    throw std::invalid_argument("train: data width does not match model");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (cfg.cd_k < 1) throw std::invalid_argument("train: cd_k must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (!(cfg.rmsprop_decay >= 0.0 && cfg.rmsprop_decay < 1.0))
    throw std::invalid_argument("train: rmsprop decay must be in [0,1)");

  if (cfg.fix_d) {
    if (!(*cfg.fix_d > 0.0)) throw std::invalid_argument("train: fix_d must be > 0");
    model.d.setConstant(*cfg.fix_d);
  }

  // Usable examples: domain-checked once; empty Count documents are skipped.
  std::vector<Eigen::Index> usable;
  usable.reserve(static_cast<std::size_t>(data.size()));
  Eigen::Index skipped = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.example(i);
    validate_visible(model, x);
    if (model.kind == Kind::Count && x.sum() < 0.5) {
      ++skipped;
      continue;
    }
    usable.push_back(i);
  }
  if (skipped > 0)
    std::cerr << "warning: skipping " << skipped << " empty document(s)\n";
  if (usable.empty()) throw std::invalid_argument("train: no usable examples");
  DataBatch used;
  used.kind = data.kind;
  used.rows.resize(static_cast<Eigen::Index>(usable.size()), data.dim());
  for (std::size_t i = 0; i < usable.size(); ++i)
    used.rows.row(static_cast<Eigen::Index>(i)) = data.rows.row(usable[i]);

  RngStream root(cfg.seed);
  RmspropState ms = RmspropState::zeros_like(model);
  std::vector<EpochMetrics> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    RngStream epoch_stream = root.child(static_cast<std::uint64_t>(epoch));
    RngStream shuffle_stream = epoch_stream.child(0);
    std::vector<Eigen::Index> perm(used.size());
    for (Eigen::Index i = 0; i < used.size(); ++i) perm[static_cast<std::size_t>(i)] = i;
    for (std::size_t i = perm.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_stream.below(i));
      std::swap(perm[i - 1], perm[j]);
    }
    std::size_t batch_index = 0;
    for (std::size_t off = 0; off < perm.size(); off += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(perm.size(), off + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Eigen::VectorXd> batch;
      batch.reserve(end - off);
      for (std::size_t i = off; i < end; ++i) batch.push_back(used.example(perm[i]));
      RngStream batch_stream = epoch_stream.child(1 + batch_index++);
      const Gradient g = cd_gradient(model, batch, cfg.cd_k, batch_stream, cfg.threads);
      rmsprop_update(model, g, ms, cfg);
    }
    EpochMetrics row;
    row.epoch = epoch;
    row.recon_error = reconstruction_error(model, used);
    if (eval) row.exact_loglik = exact_mean_loglik(model, *eval);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.push_back(row);
  }
  return history;
}

DeepModel train_deep(const std::vector<Eigen::Index>& hidden_widths, const DataBatch& data,
                     const TrainConfig& cfg,
                     std::vector<std::vector<EpochMetrics>>* per_layer) {
  if (hidden_widths.empty())
    throw std::invalid_argument("train_deep: need at least one hidden width");
  for (Eigen::Index w : hidden_widths)
    if (w < 1) throw std::invalid_argument("train_deep: hidden widths must be >= 1");

  RngStream seeder(cfg.seed);
  DeepModel deep;
  if (per_layer) per_layer->clear();
  DataBatch features = data;
  for (std::size_t l = 0; l < hidden_widths.size(); ++l) {
    const Kind kind = l == 0 ? data.kind : Kind::TruncatedReal;
    // The bottom block uses cfg.seed directly so a one-block stack trains
    // identically to train() itself; upper blocks draw derived seeds.
    const std::uint64_t upper_a = seeder.bits(), upper_b = seeder.bits();
    const std::uint64_t init_seed = l == 0 ? cfg.seed : upper_a;
    TrainConfig layer_cfg = cfg;
    layer_cfg.seed = l == 0 ? cfg.seed : upper_b;
    ModelParams block = init_model(features.dim(), hidden_widths[l], kind, init_seed);
    auto metrics = train(block, features, layer_cfg);
    if (per_layer) per_layer->push_back(std::move(metrics));
    if (l + 1 < hidden_widths.size()) {
      DataBatch next;
      next.kind = Kind::TruncatedReal;
      next.rows.resize(features.size(), hidden_widths[l]);
      for (Eigen::Index i = 0; i < features.size(); ++i)
        next.rows.row(i) = hidden_mean(block, features.example(i)).transpose();
      features = std::move(next);
    }
    deep.layers.push_back(std::move(block));
  }
  return deep;
}

ReluInit relu_init_maps(const DeepModel& deep) {
  deep.validate();
  ReluInit relu;
  for (const auto& layer : deep.layers) {
    Eigen::MatrixXd weight = layer.W.transpose();
    Eigen::VectorXd bias = layer.c;
    for (Eigen::Index j = 0; j < layer.m(); ++j) {
      weight.row(j) /= layer.d[j];
      bias[j] /= layer.d[j];
    }
    relu.weights.push_back(std::move(weight));
    relu.biases.push_back(std::move(bias));
  }
  return relu;
}

void export_relu_init(const DeepModel& deep, const std::string& path) {
  save_checkpoint(path, relu_init_maps(deep));
}

}  // namespace rtggm
