#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mixfbm/fredholm.hpp"
#include "mixfbm/gaussian_sim.hpp"
#include "mixfbm/model.hpp"

namespace mixfbm {

struct NIntegral {
  double value = 0.0;          // midpoint sum on the full grid
  double half_resolution = 0.0;  // same sum on every other grid point
  double refinement_diff = 0.0;  // |value - half_resolution|
  bool coarse_warning = false;   // refinement_diff > 1% of sqrt(<N>)
};

// sum_i h_T((t_i+t_{i+1})/2) (X(t_{i+1}) - X(t_i)).  qv_N > 0 enables the warning.
NIntegral stochastic_integral_N(const std::function<double(double)>& h_T, const SamplePath& x,
                                double qv_N = 0.0);

// The same sums as fixed weights on a grid, for repeated use over replicates.
struct NFunctional {
  std::vector<double> times;  // with origin
  Eigen::VectorXd w_full;     // one entry per cell
  Eigen::VectorXd w_half;     // one entry per double cell

  NFunctional(const std::function<double(double)>& h_T, const std::vector<double>& times,
              unsigned threads = 1);
  // values excluding the origin (column layout of CovarianceModel::sample_batch)
  double full(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  double half(const Eigen::Ref<const Eigen::VectorXd>& v) const;
};

struct EstimatorResult {
  double theta_hat = 0.0;
  double n_T = 0.0;
  double qv_N = 0.0;
  double drift_norm = 0.0;
  double variance_pred = 0.0;        // 1 / (d^2 <N>)
  double variance_pred_paper = 0.0;  // 1 / int_0^T h_T(s) s^{1-2H1} ds
  NIntegral n_detail;

  double loglik_at(double theta) const;
};

// theta_hat = n_T / (drift_norm qv_N)
EstimatorResult estimate_from(double n_T, double qv_N, double drift_norm, double sigma2_gamma2);

EstimatorResult mle(const FredholmSolution& sol, const SamplePath& x, const DerivedConstants& k);

// theta d N - theta^2 d^2 <N> / 2
double log_likelihood(const EstimatorResult& r, double theta);

}  // namespace mixfbm
