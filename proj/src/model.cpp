#include "rtggm/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rtggm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

bool all_finite(const Eigen::MatrixXd& v) { return v.allFinite(); }

// Contribution of one hidden unit to log p*(x): the log of
// integral exp(-d/2 h^2 + s h) dh over [0,inf) (truncated) or R (plain):
//   truncated: s^2/(2d) + 1/2 log(2*pi/d) + log Phi(s/sqrt(d))
//   plain:     s^2/(2d) + 1/2 log(2*pi/d)
double hidden_free_term(double d, double s, bool truncated) {
  double t = 0.5 * s * s / d + 0.5 * (kLog2Pi - std::log(d));
  if (truncated) t += std_normal_log_cdf(s / std::sqrt(d));
  return t;
}

bool is_zero_or_one(double v) { return v == 0.0 || v == 1.0; }

bool is_nonneg_integer(double v) {
  return v >= 0.0 && v == std::floor(v) && std::isfinite(v);
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::TruncatedReal: return "truncated-real";
    case Kind::Real: return "real";
    case Kind::Binary: return "binary";
    case Kind::Count: return "count";
    case Kind::RggmBinary: return "rggm-binary";
  }
  return "unknown";
}

void ModelParams::validate() const {
  const Eigen::Index nn = W.rows(), mm = W.cols();
  if (nn < 1 || mm < 1) throw std::invalid_argument("model: W must be non-empty");
  if (a.size() != nn || b.size() != nn)
    throw std::invalid_argument("model: a and b must have length n");
  if (d.size() != mm || c.size() != mm)
    throw std::invalid_argument("model: d and c must have length m");
  if (!all_finite(W) || !all_finite(a) || !all_finite(d) || !all_finite(b) ||
      !all_finite(c))
    throw std::invalid_argument("model: parameters must be finite");
  if ((d.array() <= 0.0).any())
    throw std::invalid_argument("model: hidden precisions d must be > 0");
  if (kind_uses_a(kind) && (a.array() <= 0.0).any())
    throw std::invalid_argument("model: visible precisions a must be > 0");
}

void DeepModel::validate() const {
  if (layers.empty()) throw std::invalid_argument("deep model: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0) {
      if (layers[l].kind != Kind::TruncatedReal)
        throw std::invalid_argument(
            "deep model: blocks above the bottom must have truncated-real visible kind");
      if (layers[l].n() != layers[l - 1].m()) {
        std::ostringstream os;
        os << "deep model: block " << l << " visible width " << layers[l].n()
           << " != block " << (l - 1) << " hidden width " << layers[l - 1].m();
        throw std::invalid_argument(os.str());
      }
    }
  }
}

double effective_doc_len(const ModelParams& model, const Eigen::VectorXd& x) {
  return model.kind == Kind::Count ? x.sum() : 1.0;
}

void validate_visible(const ModelParams& model, const Eigen::VectorXd& x) {
  if (x.size() != model.n()) {
    std::ostringstream os;
    os << "visible state has length " << x.size() << ", model expects " << model.n();
    throw std::invalid_argument(os.str());
  }
  if (!x.allFinite()) throw std::invalid_argument("visible state has non-finite entries");
  switch (model.kind) {
    case Kind::TruncatedReal:
      if ((x.array() < 0.0).any())
        throw std::invalid_argument("truncated-real visible state must be >= 0");
      break;
    case Kind::Real:
      break;
    case Kind::Binary:
    case Kind::RggmBinary:
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!is_zero_or_one(x[i]))
          throw std::invalid_argument("binary visible state must be 0/1");
      break;
    case Kind::Count:
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!is_nonneg_integer(x[i]))
          throw std::invalid_argument("count visible state must be non-negative integers");
      break;
  }
}

double energy(const ModelParams& model, const Eigen::VectorXd& x,
              const Eigen::VectorXd& h) {
  validate_visible(model, x);
  if (h.size() != model.m())
    throw std::invalid_argument("hidden state has wrong length");
  if (!h.allFinite()) throw std::invalid_argument("hidden state has non-finite entries");
  if (kind_hidden_truncated(model.kind) && (h.array() < 0.0).any())
    throw std::invalid_argument("hidden state must be >= 0 for this kind");
  const double K = effective_doc_len(model, x);
  double e = 0.5 * x.cwiseProduct(model.a.cwiseProduct(x)).sum() - model.b.dot(x);
  e += 0.5 * h.cwiseProduct(model.d.cwiseProduct(h)).sum() - K * model.c.dot(h);
  e -= x.dot(model.W * h);
  return e;
}

std::vector<TruncNormParams> cond_hidden(const ModelParams& model,
                                         const Eigen::VectorXd& x) {
  validate_visible(model, x);
  const double K = effective_doc_len(model, x);
  const Eigen::VectorXd s = model.W.transpose() * x + K * model.c;
  std::vector<TruncNormParams> out(static_cast<std::size_t>(model.m()));
  for (Eigen::Index j = 0; j < model.m(); ++j)
    out[static_cast<std::size_t>(j)] = {s[j] / model.d[j], 1.0 / model.d[j]};
  return out;
}

Eigen::VectorXd hidden_mean(const ModelParams& model, const Eigen::VectorXd& x) {
  const auto cond = cond_hidden(model, x);
  Eigen::VectorXd mu(model.m());
  const bool truncated = kind_hidden_truncated(model.kind);
  for (Eigen::Index j = 0; j < model.m(); ++j) {
    const auto& p = cond[static_cast<std::size_t>(j)];
    mu[j] = truncated ? trunc_mean(p) : p.xi;
  }
  return mu;
}

Eigen::VectorXd hidden_second_moment(const ModelParams& model,
                                     const Eigen::VectorXd& x) {
  const auto cond = cond_hidden(model, x);
  Eigen::VectorXd m2(model.m());
  const bool truncated = kind_hidden_truncated(model.kind);
  for (Eigen::Index j = 0; j < model.m(); ++j) {
    const auto& p = cond[static_cast<std::size_t>(j)];
    m2[j] = truncated ? trunc_second_moment(p) : p.lambda_sq + p.xi * p.xi;
  }
  return m2;
}

VisibleConditional cond_visible(const ModelParams& model,
                                const Eigen::VectorXd& h) {
  if (h.size() != model.m())
    throw std::invalid_argument("hidden state has wrong length");
  if (!h.allFinite()) throw std::invalid_argument("hidden state has non-finite entries");
  if (kind_hidden_truncated(model.kind) && (h.array() < 0.0).any())
    throw std::invalid_argument("hidden state must be >= 0 for this kind");
  const Eigen::VectorXd act = model.W * h + model.b;
  VisibleConditional cond;
  cond.kind = model.kind;
  switch (model.kind) {
    case Kind::TruncatedReal:
    case Kind::Real:
      cond.loc = act.cwiseQuotient(model.a);
      cond.var = model.a.cwiseInverse();
      break;
    case Kind::Binary:
    case Kind::RggmBinary:
      cond.loc = (1.0 / (1.0 + (-act.array()).exp())).matrix();
      break;
    case Kind::Count: {
      // softmax(act), max-shifted for stability
      const double mx = act.maxCoeff();
      Eigen::ArrayXd e = (act.array() - mx).exp();
      cond.loc = (e / e.sum()).matrix();
      break;
    }
  }
  return cond;
}

Eigen::VectorXd visible_mean(const VisibleConditional& cond, double doc_len) {
  switch (cond.kind) {
    case Kind::TruncatedReal: {
      Eigen::VectorXd mu(cond.loc.size());
      for (Eigen::Index i = 0; i < cond.loc.size(); ++i)
        mu[i] = trunc_mean({cond.loc[i], cond.var[i]});
      return mu;
    }
    case Kind::Real:
    case Kind::Binary:
    case Kind::RggmBinary:
      return cond.loc;
    case Kind::Count:
      return doc_len * cond.loc;
  }
  throw std::logic_error("unreachable");
}

double log_p_star(const ModelParams& model, const Eigen::VectorXd& x) {
  validate_visible(model, x);
  const double K = effective_doc_len(model, x);
  const Eigen::VectorXd s = model.W.transpose() * x + K * model.c;
  double lp = model.b.dot(x);
  if (kind_uses_a(model.kind))
    lp -= 0.5 * x.cwiseProduct(model.a.cwiseProduct(x)).sum();
  const bool truncated = kind_hidden_truncated(model.kind);
  for (Eigen::Index j = 0; j < model.m(); ++j)
    lp += hidden_free_term(model.d[j], s[j], truncated);
  return lp;
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double mx = v[0];
  for (double x : v)
    if (x > mx) mx = x;
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double exact_log_partition(const ModelParams& model, int doc_len) {
  model.validate();
  const Eigen::Index n = model.n();
  if (kind_is_binary(model.kind)) {
    if (n > 20)
      throw std::invalid_argument(
          "exact_log_partition: binary enumeration limited to n <= 20");
    const std::uint64_t states = 1ull << n;
    std::vector<double> lps;
    lps.reserve(states);
    Eigen::VectorXd x(n);
    for (std::uint64_t bits = 0; bits < states; ++bits) {
      for (Eigen::Index i = 0; i < n; ++i) x[i] = (bits >> i) & 1u ? 1.0 : 0.0;
      lps.push_back(log_p_star(model, x));
    }
    return log_sum_exp(lps);
  }
  if (model.kind == Kind::Count) {
    if (doc_len < 0) throw std::invalid_argument("exact_log_partition: doc_len must be >= 0");
    double seq_count = std::pow(static_cast<double>(n), doc_len);
    if (seq_count > 1e6)
      throw std::invalid_argument(
          "exact_log_partition: count enumeration limited to n^doc_len <= 1e6");
    // Enumerate ordered word sequences with an odometer; each sequence maps
    // to its count vector. Sequences are the enumeration unit, so no
    // multinomial coefficients appear.
    std::vector<int> word(static_cast<std::size_t>(doc_len), 0);
    std::vector<double> lps;
    Eigen::VectorXd x(n);
    for (;;) {
      x.setZero();
      for (int w : word) x[w] += 1.0;
      lps.push_back(log_p_star(model, x));
      int pos = 0;
      while (pos < doc_len) {
        if (++word[static_cast<std::size_t>(pos)] < n) break;
        word[static_cast<std::size_t>(pos)] = 0;
        ++pos;
      }
      if (pos == doc_len) break;
    }
    return log_sum_exp(lps);
  }
  throw std::invalid_argument(
      "exact_log_partition: visible domain is not finitely enumerable for kind " +
      std::string(kind_name(model.kind)));
}

Eigen::MatrixXd precision_matrix(const ModelParams& model) {
  const Eigen::Index n = model.n(), m = model.m();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n + m, n + m);
  P.topLeftCorner(n, n) = model.a.asDiagonal();
  P.bottomRightCorner(m, m) = model.d.asDiagonal();
  P.topRightCorner(n, m) = -model.W;
  P.bottomLeftCorner(m, n) = -model.W.transpose();
  return P;
}

bool is_positive_definite(const Eigen::MatrixXd& sym) {
  if (sym.rows() != sym.cols()) throw std::invalid_argument("matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace rtggm
