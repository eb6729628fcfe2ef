// Command-line front end: train / train-deep / eval / sample / impute /
// export-relu / curve. Metrics go to standard output as TSV (with '#'
// header lines echoing every resolved flag); artifacts go to files named
// explicitly by --out.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rtggm/ais.hpp"
#include "rtggm/data_io.hpp"
#include "rtggm/gibbs.hpp"
#include "rtggm/impute.hpp"
#include "rtggm/model.hpp"
#include "rtggm/train.hpp"

namespace {

using namespace rtggm;

// Semantic flag problems found after parsing (exit code 2, like parse errors).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Kind variant_kind(const std::string& variant) {
  if (variant == "basic") return Kind::TruncatedReal;
  if (variant == "real") return Kind::Real;
  if (variant == "binary") return Kind::Binary;
  if (variant == "count") return Kind::Count;
  if (variant == "rggm") return Kind::RggmBinary;
  throw UsageError("unknown variant '" + variant + "'");
}

struct DataFlags {
  std::string path;
  std::string format;
  int vocab = 0;
  double binarize_threshold = 0.5;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, const char* path_flag = "--data") {
  cmd->add_option(path_flag, f.path, "input data file")->required();
  cmd->add_option("--format", f.format, "data file format: idx|bow|csv")
      ->required()
      ->check(CLI::IsMember({"idx", "bow", "csv"}));
  cmd->add_option("--vocab", f.vocab, "vocabulary size (bow format)");
  cmd->add_option("--binarize-threshold", f.binarize_threshold,
                  "threshold for binarizing real-valued inputs (binary/rggm variants)");
}

// Load and coerce data to the target kind's domain.
DataBatch load_data(const DataFlags& f, Kind kind) {
  DataBatch batch;
  if (f.format == "bow") {
    if (f.vocab < 1) throw UsageError("--format bow requires --vocab");
    batch = load_bow(f.path, f.vocab);
  } else if (f.format == "idx") {
    batch = load_idx(f.path);
  } else {
    batch = load_csv(f.path);
  }
  if (kind == Kind::Count && f.format != "bow") {
    // counts supplied densely; validated per-example downstream
    batch.kind = Kind::Count;
  } else if (kind_is_binary(kind) && f.format != "bow") {
    batch = binarize(batch, f.binarize_threshold);
    batch.kind = kind;
  } else if (kind == Kind::Count && f.format == "bow") {
    batch.kind = kind;
  } else {
    if (f.format == "bow")
      throw UsageError("--format bow is only valid for the count variant");
    batch.kind = kind;
  }
  return batch;
}

void write_csv(const std::string& path, const std::vector<Eigen::VectorXd>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& r : rows) {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << fmt(r[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

struct CommonFlags {
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;

  int effective_threads() const { return deterministic ? 1 : threads; }
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "random seed (default 0)");
  cmd->add_option("--threads", f.threads, "worker threads (default 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--deterministic", f.deterministic,
                "force single-threaded reductions and timing-free output");
}

void header_line(std::ostream& os, const std::string& key, const std::string& value) {
  os << "# " << key << "=" << value << "\n";
}

void common_header(std::ostream& os, const std::string& cmd, const CommonFlags& f) {
  header_line(os, "cmd", cmd);
  header_line(os, "seed", std::to_string(f.seed));
  header_line(os, "threads", std::to_string(f.effective_threads()));
  header_line(os, "deterministic", f.deterministic ? "1" : "0");
}

// ---------------------------------------------------------------- train ---

struct TrainFlags {
  DataFlags data;
  std::string variant;
  int hidden = 0;
  std::vector<Eigen::Index> widths;  // train-deep only
  int cd_k = 25;
  double lr = 1e-4;
  double rmsprop_decay = 0.95;
  int epochs = 10;
  int batch_size = 100;
  double fix_d = 5.0;
  bool fix_d_given = false;
  bool learn_d = false;
  std::string eval_path;
  std::string out;
  CommonFlags common;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool deep) {
  add_data_flags(cmd, f.data);
  cmd->add_option("--variant", f.variant, "visible kind: basic|real|binary|count|rggm")
      ->required()
      ->check(CLI::IsMember({"basic", "real", "binary", "count", "rggm"}));
  if (deep) {
    cmd->add_option("--widths", f.widths, "comma-separated hidden layer widths")
        ->required()
        ->delimiter(',');
  } else {
    cmd->add_option("--hidden", f.hidden, "hidden layer width")->required();
  }
  cmd->add_option("--k", f.cd_k, "contrastive-divergence steps (default 25)");
  cmd->add_option("--lr", f.lr, "learning rate (default 1e-4)");
  cmd->add_option("--rmsprop-decay", f.rmsprop_decay, "RMSprop decay (default 0.95)");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-size", f.batch_size, "minibatch size (default 100)");
  cmd->add_option("--fix-d", f.fix_d,
                  "freeze hidden precisions at this value (default 5 for binary)")
      ->trigger_on_parse()
      ->each([&f](const std::string&) { f.fix_d_given = true; });
  cmd->add_flag("--learn-d", f.learn_d, "learn hidden precisions (overrides --fix-d default)");
  cmd->add_option("--eval", f.eval_path,
                  "held-out set for exact log-likelihood metrics (same format)");
  cmd->add_option("--out", f.out, "checkpoint output path")->required();
  add_common_flags(cmd, f.common);
}

TrainConfig make_train_config(const TrainFlags& f, Kind kind) {
  TrainConfig cfg;
  cfg.cd_k = f.cd_k;
  cfg.learning_rate = f.lr;
  cfg.rmsprop_decay = f.rmsprop_decay;
  cfg.batch_size = f.batch_size;
  cfg.epochs = f.epochs;
  cfg.seed = f.common.seed;
  cfg.threads = f.common.effective_threads();
  if (f.learn_d) {
    if (f.fix_d_given) throw UsageError("--learn-d conflicts with --fix-d");
  } else if (f.fix_d_given) {
    cfg.fix_d = f.fix_d;
  } else if (kind == Kind::Binary) {
    cfg.fix_d = 5.0;
  }
  return cfg;
}

void train_header(std::ostream& os, const TrainFlags& f, const TrainConfig& cfg,
                  const char* cmd_name) {
  common_header(os, cmd_name, f.common);
  header_line(os, "data", f.data.path);
  header_line(os, "format", f.data.format);
  header_line(os, "variant", f.variant);
  if (f.data.format == "bow") header_line(os, "vocab", std::to_string(f.data.vocab));
  if (kind_is_binary(variant_kind(f.variant)) && f.data.format != "bow")
    header_line(os, "binarize-threshold", fmt(f.data.binarize_threshold));
  header_line(os, "k", std::to_string(cfg.cd_k));
  header_line(os, "lr", fmt(cfg.learning_rate));
  header_line(os, "rmsprop-decay", fmt(cfg.rmsprop_decay));
  header_line(os, "epochs", std::to_string(cfg.epochs));
  header_line(os, "batch-size", std::to_string(cfg.batch_size));
  header_line(os, "fix-d", cfg.fix_d ? fmt(*cfg.fix_d) : std::string("learned"));
  if (!f.eval_path.empty()) header_line(os, "eval", f.eval_path);
  header_line(os, "out", f.out);
}

void print_metrics(std::ostream& os, const std::vector<EpochMetrics>& rows,
                   bool with_loglik, bool deterministic, int layer = -1) {
  os << (layer >= 0 ? "layer\t" : "") << "epoch\trecon_error";
  if (with_loglik) os << "\texact_loglik";
  os << "\twall_seconds\n";
  for (const auto& r : rows) {
    if (layer >= 0) os << layer << '\t';
    os << r.epoch << '\t' << fmt(r.recon_error);
    if (with_loglik) os << '\t' << (r.exact_loglik ? fmt(*r.exact_loglik) : "na");
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", deterministic ? 0.0 : r.wall_seconds);
    os << '\t' << wall << '\n';
  }
}

void cmd_train(const TrainFlags& f) {
  const Kind kind = variant_kind(f.variant);
  if (f.hidden < 1) throw UsageError("--hidden must be >= 1");
  const TrainConfig cfg = make_train_config(f, kind);
  train_header(std::cout, f, cfg, "train");
  header_line(std::cout, "hidden", std::to_string(f.hidden));
  const DataBatch data = load_data(f.data, kind);
  std::optional<DataBatch> eval;
  if (!f.eval_path.empty()) {
    DataFlags ef = f.data;
    ef.path = f.eval_path;
    eval = load_data(ef, kind);
  }
  ModelParams model = init_model(data.dim(), f.hidden, kind, cfg.seed);
  const auto metrics = train(model, data, cfg, eval ? &*eval : nullptr);
  print_metrics(std::cout, metrics, eval.has_value(), f.common.deterministic);
  save_checkpoint(f.out, model);
}

void cmd_train_deep(const TrainFlags& f) {
  const Kind kind = variant_kind(f.variant);
  if (f.widths.empty()) throw UsageError("--widths must name at least one layer");
  for (auto w : f.widths)
    if (w < 1) throw UsageError("--widths entries must be >= 1");
  const TrainConfig cfg = make_train_config(f, kind);
  train_header(std::cout, f, cfg, "train-deep");
  std::ostringstream ws;
  for (std::size_t i = 0; i < f.widths.size(); ++i) {
    if (i) ws << ',';
    ws << f.widths[i];
  }
  header_line(std::cout, "widths", ws.str());
  const DataBatch data = load_data(f.data, kind);
  std::vector<std::vector<EpochMetrics>> per_layer;
  const DeepModel deep = train_deep(f.widths, data, cfg, &per_layer);
  for (std::size_t l = 0; l < per_layer.size(); ++l)
    print_metrics(std::cout, per_layer[l], false, f.common.deterministic,
                  static_cast<int>(l));
  save_checkpoint(f.out, deep);
}

// ----------------------------------------------------------------- eval ---

struct EvalFlags {
  std::string model_path;
  DataFlags test;
  int ais_temps = 100000;
  int ais_runs = 100;
  std::string report = "logprob";
  bool exact = false;
  double smoothing = 0.01;
  CommonFlags common;
};

void cmd_eval(const EvalFlags& f) {
  common_header(std::cout, "eval", f.common);
  header_line(std::cout, "model", f.model_path);
  header_line(std::cout, "test", f.test.path);
  header_line(std::cout, "format", f.test.format);
  header_line(std::cout, "ais-temps", std::to_string(f.ais_temps));
  header_line(std::cout, "ais-runs", std::to_string(f.ais_runs));
  header_line(std::cout, "report", f.report);
  header_line(std::cout, "exact", f.exact ? "1" : "0");
  header_line(std::cout, "smoothing", fmt(f.smoothing));

  const ModelParams model = load_model(f.model_path);
  if (!(model.kind == Kind::Binary || model.kind == Kind::Count ||
        model.kind == Kind::RggmBinary))
    throw UsageError("eval supports binary, count, and rggm-binary models");
  if (f.report == "perplexity" && model.kind != Kind::Count)
    throw UsageError("--report perplexity requires a count model");
  if (f.report == "logprob" && model.kind == Kind::Count)
    throw UsageError("count models are scored with --report perplexity");

  const Kind data_kind = model.kind;
  const DataBatch test = load_data(f.test, data_kind);
  if (test.dim() != model.n())
    throw std::runtime_error("test data width does not match the model");

  RngStream rng(f.common.seed);
  AISConfig ais_cfg;
  ais_cfg.n_temps = f.ais_temps;
  ais_cfg.n_chains = f.ais_runs;
  ais_cfg.threads = f.common.effective_threads();

  const std::string metric_name =
      f.report == "perplexity" ? "perplexity" : "mean_test_log_prob";
  std::cout << "model\tkind\tn_temps\tn_chains\tlog_z\tstderr\t" << metric_name
            << "\tn_test\n";

  if (model.kind == Kind::Count) {
    std::set<long> lengths;
    for (Eigen::Index i = 0; i < test.size(); ++i)
      lengths.insert(static_cast<long>(std::llround(test.example(i).sum())));
    std::map<long, double> log_z;
    std::map<long, double> log_z_err;
    const BaseRateModel base = fit_base_rate(test, f.smoothing);
    for (long K : lengths) {
      if (f.exact) {
        if (std::pow(static_cast<double>(model.n()), K) > 1e6)
          throw UsageError(
              "--exact requires n^doc_len <= 1e6 for count models; document length " +
              std::to_string(K) + " over vocabulary " + std::to_string(model.n()) +
              " is too large");
        log_z[K] = exact_log_partition(model, static_cast<int>(K));
        log_z_err[K] = 0.0;
      } else {
        RngStream chain_rng = rng.child(static_cast<std::uint64_t>(K));
        const AISResult r = ais_run(model, base, ais_cfg, chain_rng, K);
        log_z[K] = r.log_z;
        log_z_err[K] = r.log_z_stderr;
      }
      std::cout << "# doc_len=" << K << " log_z=" << fmt(log_z[K])
                << " stderr=" << fmt(log_z_err[K]) << "\n";
    }
    const double perp = perplexity(model, log_z, test);
    // Weight the per-K partition functions by document frequency for the
    // single summary row.
    double mean_lz = 0.0, mean_err = 0.0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
      const long K = static_cast<long>(std::llround(test.example(i).sum()));
      mean_lz += log_z[K];
      mean_err += log_z_err[K];
    }
    mean_lz /= static_cast<double>(test.size());
    mean_err /= static_cast<double>(test.size());
    std::cout << f.model_path << '\t' << kind_name(model.kind) << '\t' << f.ais_temps
              << '\t' << f.ais_runs << '\t' << fmt(mean_lz) << '\t' << fmt(mean_err)
              << '\t' << fmt(perp) << '\t' << test.size() << '\n';
    return;
  }

  double log_z = 0.0, log_z_err = 0.0;
  if (f.exact) {
    if (model.n() > 20)
      throw UsageError("--exact enumerates 2^n states and requires n <= 20; model has n = " +
                       std::to_string(model.n()));
    log_z = exact_log_partition(model);
  } else {
    const BaseRateModel base = fit_base_rate(test, f.smoothing);
    const AISResult r = ais_run(model, base, ais_cfg, rng);
    log_z = r.log_z;
    log_z_err = r.log_z_stderr;
  }
  const TestLogProb tlp = test_log_prob(model, log_z, test);
  std::cout << f.model_path << '\t' << kind_name(model.kind) << '\t' << f.ais_temps
            << '\t' << f.ais_runs << '\t' << fmt(log_z) << '\t' << fmt(log_z_err) << '\t'
            << fmt(tlp.mean) << '\t' << test.size() << '\n';
}

// --------------------------------------------------------------- sample ---

struct SampleFlags {
  std::string model_path;
  long burn_in = 50000;
  int n = 100;
  long thin = 1;
  long count_len = 0;
  std::string out;
  CommonFlags common;
};

void cmd_sample(const SampleFlags& f) {
  common_header(std::cout, "sample", f.common);
  header_line(std::cout, "model", f.model_path);
  header_line(std::cout, "burn-in", std::to_string(f.burn_in));
  header_line(std::cout, "n", std::to_string(f.n));
  header_line(std::cout, "thin", std::to_string(f.thin));
  if (f.count_len > 0) header_line(std::cout, "count-len", std::to_string(f.count_len));
  header_line(std::cout, "out", f.out);

  const Checkpoint cp = load_checkpoint(f.model_path);
  RngStream rng(f.common.seed);
  std::vector<GeneratedSample> samples;
  Kind bottom_kind;
  if (const auto* m = std::get_if<ModelParams>(&cp)) {
    bottom_kind = m->kind;
    if (m->kind == Kind::Count && f.count_len < 1)
      throw UsageError("sampling a count model requires --count-len >= 1");
    samples = generate(*m, f.burn_in, f.n, f.thin, rng, f.count_len);
  } else if (const auto* d = std::get_if<DeepModel>(&cp)) {
    bottom_kind = d->layers[0].kind;
    if (bottom_kind == Kind::Count && f.count_len < 1)
      throw UsageError("sampling a count model requires --count-len >= 1");
    samples = generate_deep(*d, f.burn_in, f.n, rng, f.count_len, f.thin);
  } else {
    throw UsageError("checkpoint holds rectifier-init maps, not a sampleable model");
  }

  // Binary kinds emit sample bits followed by the per-pixel probabilities in
  // the same row; other kinds emit the sample only.
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) {
    if (kind_is_binary(bottom_kind)) {
      Eigen::VectorXd row(s.sample.size() + s.mean.size());
      row << s.sample, s.mean;
      rows.push_back(std::move(row));
    } else {
      rows.push_back(s.sample);
    }
  }
  write_csv(f.out, rows);
  std::cout << "wrote\t" << rows.size() << "\tsamples\n";
}

// --------------------------------------------------------------- impute ---

struct ImputeFlags {
  std::string model_path;
  DataFlags data;
  std::string mask_spec;
  long burn_in = 1000;
  long n_samples = 1000;
  std::string out;
  CommonFlags common;
};

// Mask spec "rows:A-B" or "cols:A-B[,C-D...]": the named image rows/columns
// are OBSERVED; the image is square with side sqrt(n).
ObservationMask parse_mask_spec(const std::string& spec, Eigen::Index n) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw UsageError("mask spec must look like rows:0-13 or cols:0-13");
  const std::string what = spec.substr(0, colon);
  if (what != "rows" && what != "cols")
    throw UsageError("mask spec must start with rows: or cols:");
  const auto side_d = std::llround(std::sqrt(static_cast<double>(n)));
  if (side_d * side_d != n)
    throw UsageError("row/column masks need a square image; model width " +
                     std::to_string(n) + " is not a perfect square");
  const Eigen::Index side = static_cast<Eigen::Index>(side_d);
  std::vector<bool> line_observed(static_cast<std::size_t>(side), false);
  std::istringstream ranges(spec.substr(colon + 1));
  std::string range;
  bool any = false;
  while (std::getline(ranges, range, ',')) {
    long lo = 0, hi = 0;
    const auto dash = range.find('-');
    try {
      if (dash == std::string::npos) {
        lo = hi = std::stol(range);
      } else {
        lo = std::stol(range.substr(0, dash));
        hi = std::stol(range.substr(dash + 1));
      }
    } catch (const std::exception&) {
      throw UsageError("bad mask range '" + range + "'");
    }
    if (lo < 0 || hi >= side || lo > hi)
      throw UsageError("mask range '" + range + "' out of bounds for side " +
                       std::to_string(side));
    for (long r = lo; r <= hi; ++r) line_observed[static_cast<std::size_t>(r)] = true;
    any = true;
  }
  if (!any) throw UsageError("mask spec names no ranges");
  ObservationMask mask;
  mask.observed.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index line = what == "rows" ? i / side : i % side;
    mask.observed[static_cast<std::size_t>(i)] =
        line_observed[static_cast<std::size_t>(line)];
  }
  const Eigen::Index obs = mask.n_observed();
  if (obs == 0) throw UsageError("mask observes nothing");
  if (obs == n) throw UsageError("mask observes every pixel; nothing to impute");
  return mask;
}

void cmd_impute(const ImputeFlags& f) {
  common_header(std::cout, "impute", f.common);
  header_line(std::cout, "model", f.model_path);
  header_line(std::cout, "data", f.data.path);
  header_line(std::cout, "format", f.data.format);
  header_line(std::cout, "mask-spec", f.mask_spec);
  header_line(std::cout, "burn-in", std::to_string(f.burn_in));
  header_line(std::cout, "n-samples", std::to_string(f.n_samples));
  header_line(std::cout, "out", f.out);

  const ModelParams model = load_model(f.model_path);
  if (model.kind == Kind::Count)
    throw UsageError("imputation is not defined for count models");
  const ObservationMask mask = parse_mask_spec(f.mask_spec, model.n());
  const DataBatch data = load_data(f.data, model.kind);
  if (data.dim() != model.n())
    throw std::runtime_error("data width does not match the model");

  RngStream rng(f.common.seed);
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.example(i);
    RngStream stream = rng.child(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd est = impute(model, x, mask, f.burn_in, f.n_samples, stream);
    // Completed row: observed values kept, unobserved filled with estimates.
    Eigen::VectorXd row = x;
    Eigen::Index u = 0;
    for (Eigen::Index j = 0; j < model.n(); ++j)
      if (!mask.observed[static_cast<std::size_t>(j)]) row[j] = est[u++];
    rows.push_back(std::move(row));
  }
  write_csv(f.out, rows);
  std::cout << "wrote\t" << rows.size() << "\timputations\n";
}

// ---------------------------------------------------- export-relu, curve ---

void cmd_export_relu(const std::string& model_path, const std::string& out,
                     const CommonFlags& common) {
  common_header(std::cout, "export-relu", common);
  header_line(std::cout, "model", model_path);
  header_line(std::cout, "out", out);
  const Checkpoint cp = load_checkpoint(model_path);
  DeepModel deep;
  if (const auto* d = std::get_if<DeepModel>(&cp))
    deep = *d;
  else if (const auto* m = std::get_if<ModelParams>(&cp))
    deep.layers.push_back(*m);
  else
    throw UsageError("checkpoint already holds rectifier-init maps");
  export_relu_init(deep, out);
  std::cout << "wrote\t" << deep.layers.size() << "\tlayers\n";
}

void cmd_curve(double lambda_sq, const std::string& range, const std::string& out,
               const CommonFlags& common) {
  common_header(std::cout, "curve", common);
  header_line(std::cout, "lambda-sq", fmt(lambda_sq));
  header_line(std::cout, "range", range);
  header_line(std::cout, "out", out);
  if (!(lambda_sq > 0.0)) throw UsageError("--lambda-sq must be > 0");
  double lo = 0, hi = 0, step = 0;
  if (std::sscanf(range.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0 ||
      hi < lo)
    throw UsageError("--range must look like -6:6:0.01 with positive step");
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + out + " for writing");
  os << "xi\ttrunc_mean\tsigmoid\trelu\n";
  const long steps = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    const double xi = lo + static_cast<double>(i) * step;
    const double mu = trunc_mean({xi, lambda_sq});
    const double sig = 1.0 / (1.0 + std::exp(-xi));
    const double relu = xi > 0.0 ? xi : 0.0;
    os << fmt(xi) << '\t' << fmt(mu) << '\t' << fmt(sig) << '\t' << fmt(relu) << '\n';
  }
  if (!os) throw std::runtime_error("failed writing " + out);
  std::cout << "wrote\t" << (steps + 1) << "\tpoints\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restricted truncated Gaussian graphical models"};
  app.require_subcommand(1);

  TrainFlags train_f, deep_f;
  EvalFlags eval_f;
  SampleFlags sample_f;
  ImputeFlags impute_f;
  std::string relu_model, relu_out;
  CommonFlags relu_common, curve_common;
  double curve_lambda_sq = 0.1;
  std::string curve_range = "-6:6:0.01";
  std::string curve_out;

  auto* t = app.add_subcommand("train", "train a single model with CD + RMSprop");
  add_train_flags(t, train_f, false);
  t->callback([&] { cmd_train(train_f); });

  auto* td = app.add_subcommand("train-deep", "greedy layer-wise training of a stack");
  add_train_flags(td, deep_f, true);
  td->callback([&] { cmd_train_deep(deep_f); });

  auto* e = app.add_subcommand("eval", "estimate log Z and score a test set");
  e->add_option("--model", eval_f.model_path, "model checkpoint")->required();
  add_data_flags(e, eval_f.test, "--test");
  e->add_option("--ais-temps", eval_f.ais_temps, "AIS inverse temperatures (default 100000)");
  e->add_option("--ais-runs", eval_f.ais_runs, "independent AIS chains (default 100)");
  e->add_option("--report", eval_f.report, "logprob|perplexity")
      ->check(CLI::IsMember({"logprob", "perplexity"}));
  e->add_flag("--exact", eval_f.exact, "enumerate the partition function instead of AIS");
  e->add_option("--smoothing", eval_f.smoothing, "base-rate smoothing (default 0.01)");
  add_common_flags(e, eval_f.common);
  e->callback([&] { cmd_eval(eval_f); });

  auto* s = app.add_subcommand("sample", "draw visible samples by block Gibbs");
  s->add_option("--model", sample_f.model_path, "model checkpoint")->required();
  s->add_option("--burn-in", sample_f.burn_in, "burn-in sweeps (default 50000)");
  s->add_option("--n", sample_f.n, "number of samples (default 100)");
  s->add_option("--thin", sample_f.thin, "sweeps between samples (default 1)");
  s->add_option("--count-len", sample_f.count_len, "document length for count models");
  s->add_option("--out", sample_f.out, "CSV output path")->required();
  add_common_flags(s, sample_f.common);
  s->callback([&] { cmd_sample(sample_f); });

  auto* im = app.add_subcommand("impute", "fill unobserved pixels from observed ones");
  im->add_option("--model", impute_f.model_path, "model checkpoint")->required();
  add_data_flags(im, impute_f.data);
  im->add_option("--mask-spec", impute_f.mask_spec,
                 "observed region, e.g. rows:0-13 (square images)")
      ->required();
  im->add_option("--burn-in", impute_f.burn_in, "burn-in sweeps (default 1000)");
  im->add_option("--n-samples", impute_f.n_samples, "averaged sweeps (default 1000)");
  im->add_option("--out", impute_f.out, "CSV output path")->required();
  add_common_flags(im, impute_f.common);
  im->callback([&] { cmd_impute(impute_f); });

  auto* xr = app.add_subcommand("export-relu", "export rectifier-network init maps");
  xr->add_option("--model", relu_model, "model or deep checkpoint")->required();
  xr->add_option("--out", relu_out, "output checkpoint path")->required();
  add_common_flags(xr, relu_common);
  xr->callback([&] { cmd_export_relu(relu_model, relu_out, relu_common); });

  auto* cv = app.add_subcommand("curve", "tabulate the truncated-normal mean curve");
  cv->add_option("--lambda-sq", curve_lambda_sq, "variance (default 0.1)");
  cv->add_option("--range", curve_range, "xi range lo:hi:step (default -6:6:0.01)");
  cv->add_option("--out", curve_out, "TSV output path")->required();
  add_common_flags(cv, curve_common);
  cv->callback([&] { cmd_curve(curve_lambda_sq, curve_range, curve_out, curve_common); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe);
    return 2;
  } catch (const UsageError& ue) {
    std::cerr << "usage error: " << ue.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
