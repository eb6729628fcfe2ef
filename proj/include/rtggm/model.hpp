#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rtggm/truncnorm.hpp"

namespace rtggm {

// Visible-layer kind. Hidden units are [0,inf)-truncated normal for every
// kind except RggmBinary, whose hidden units are unrestricted normal (the
// non-truncated baseline).
enum class Kind : std::uint8_t {
  TruncatedReal = 0,  // x_i >= 0, truncated-normal visible conditional
  Real = 1,           // x_i real, normal visible conditional
  Binary = 2,         // x_i in {0,1}, Bernoulli visible conditional
  Count = 3,          // x is a bag-of-words count vector over a vocabulary
  RggmBinary = 4,     // binary visible, unrestricted normal hidden
};

const char* kind_name(Kind k);

// Does this kind carry a visible precision vector `a`?
inline bool kind_uses_a(Kind k) { return k == Kind::TruncatedReal || k == Kind::Real; }
inline bool kind_is_binary(Kind k) { return k == Kind::Binary || k == Kind::RggmBinary; }
// Are the hidden units truncated to [0, inf)?
inline bool kind_hidden_truncated(Kind k) { return k != Kind::RggmBinary; }

// Bilinear model over visible x (length n) and hidden h (length m):
//   E(x,h) = 1/2 x' diag(a) x + 1/2 h' diag(d) h - x' W h - b' x - K c' h
// with K = 1 except for Count, where x is a count vector and K = sum(x).
// Kinds without `a` store a = 0 (the energy has no quadratic visible term).
struct ModelParams {
  Kind kind = Kind::TruncatedReal;
  Eigen::MatrixXd W;  // n x m pairwise weights
  Eigen::VectorXd a;  // n   visible precisions (zeros when unused)
  Eigen::VectorXd d;  // m   hidden precisions, all > 0
  Eigen::VectorXd b;  // n   visible biases
  Eigen::VectorXd c;  // m   hidden biases

  Eigen::Index n() const { return W.rows(); }
  Eigen::Index m() const { return W.cols(); }

  // Throws std::invalid_argument on dimension mismatch, non-finite entries,
  // d <= 0, or a <= 0 for kinds that use it.
  void validate() const;
};

// Stack of blocks, bottom block first. Blocks above the bottom have
// TruncatedReal visible kind, and each block's visible width equals the
// hidden width of the block below.
struct DeepModel {
  std::vector<ModelParams> layers;
  void validate() const;
};

// Document length of a visible state: sum(x) for Count, 1 otherwise.
double effective_doc_len(const ModelParams& model, const Eigen::VectorXd& x);

// Throws std::invalid_argument if x is outside the kind's visible domain.
void validate_visible(const ModelParams& model, const Eigen::VectorXd& x);

// Joint energy; validates both arguments' domains.
double energy(const ModelParams& model, const Eigen::VectorXd& x,
              const Eigen::VectorXd& h);

// Per-unit hidden conditional p(h_j | x): parameters of N(s_j/d_j, 1/d_j)
// with s = W'x + K c; truncated to [0,inf) for all kinds but RggmBinary.
std::vector<TruncNormParams> cond_hidden(const ModelParams& model,
                                         const Eigen::VectorXd& x);

// Conditional hidden mean E[h|x] and second moment E[h^2|x], kind-aware
// (truncated-normal moments, or plain normal moments for RggmBinary).
Eigen::VectorXd hidden_mean(const ModelParams& model, const Eigen::VectorXd& x);
Eigen::VectorXd hidden_second_moment(const ModelParams& model,
                                     const Eigen::VectorXd& x);

// Visible conditional p(x | h). `loc` is per-unit location: the untruncated
// mean for real kinds, Bernoulli probability for binary kinds, and the
// categorical distribution over the vocabulary for Count. `var` holds the
// per-unit variance 1/a_i for the real kinds and is empty otherwise.
struct VisibleConditional {
  Kind kind = Kind::TruncatedReal;
  Eigen::VectorXd loc;
  Eigen::VectorXd var;
};

VisibleConditional cond_visible(const ModelParams& model,
                                const Eigen::VectorXd& h);

// Mean of the visible conditional. For Count the mean of a length-K document
// is K * probs, so the caller supplies doc_len (ignored otherwise).
Eigen::VectorXd visible_mean(const VisibleConditional& cond, double doc_len = 1.0);

// Unnormalized log-marginal log p*(x) = log integral over h of exp(-E(x,h)).
// Validates the domain of x.
double log_p_star(const ModelParams& model, const Eigen::VectorXd& x);

// Exact log partition function by exhaustive enumeration of the visible
// domain. Binary kinds require n <= 20 (2^n states); Count requires
// n^doc_len <= 1e6 ordered sequences and enumerates sequences, so documents
// are weighted without multinomial coefficients. Real kinds are rejected.
double exact_log_partition(const ModelParams& model, int doc_len = 0);

// Joint precision matrix [[diag(a), -W], [-W', diag(d)]] of size (n+m)^2.
Eigen::MatrixXd precision_matrix(const ModelParams& model);

// True iff the symmetric matrix has strictly positive eigenvalues.
bool is_positive_definite(const Eigen::MatrixXd& sym);

// Numerically stable log(sum(exp(v))).
double log_sum_exp(const std::vector<double>& v);

}  // namespace rtggm
