#pragma once

#include <vector>

#include "rtggm/model.hpp"
#include "rtggm/rng.hpp"

namespace rtggm {

// Which visible coordinates are observed. Needs at least one observed and
// one unobserved index.
struct ObservationMask {
  std::vector<bool> observed;

  Eigen::Index size() const { return static_cast<Eigen::Index>(observed.size()); }
  Eigen::Index n_observed() const;
  Eigen::Index n_unobserved() const { return size() - n_observed(); }
  void validate(Eigen::Index n) const;
};

// Induced model over (x_u, h) given the observed coordinates: rows of W, a,
// and b restricted to the unobserved indices (in ascending order) and the
// hidden bias shifted to c + W_o' x_o. Same kind. `x` is full-length; only
// its observed coordinates are read. Not defined for Count (the document
// length constraint does not restrict coordinatewise).
ModelParams conditional_model(const ModelParams& model, const Eigen::VectorXd& x,
                              const ObservationMask& mask);

// Posterior-mean estimate of the unobserved coordinates (ascending index
// order): Gibbs on the conditional model for burn_in sweeps, then n_samples
// sweeps whose conditional visible means are averaged (Rao-Blackwellized
// through p(x_u | h) rather than averaging raw samples).
Eigen::VectorXd impute(const ModelParams& model, const Eigen::VectorXd& x,
                       const ObservationMask& mask, long burn_in, long n_samples,
                       RngStream& rng);

}  // namespace rtggm
