#include "mixfbm/estimator.hpp"

#include <cmath>

#include "mixfbm/errors.hpp"
#include "mixfbm/parallel.hpp"

namespace mixfbm {

namespace {

double mid_sum(const std::function<double(double)>& h, const SamplePath& x, std::size_t step) {
  double s = 0.0;
  const std::size_t n = x.size() - 1;
  std::size_t i = 0;
  for (; i + step <= n; i += step) {
    const double m = 0.5 * (x.times[i] + x.times[i + step]);
    s += h(m) * (x.values[i + step] - x.values[i]);
  }
  if (i < n) s += h(0.5 * (x.times[i] + x.times[n])) * (x.values[n] - x.values[i]);
  return s;
}

}  // namespace

NIntegral stochastic_integral_N(const std::function<double(double)>& h_T, const SamplePath& x,
                                double qv_N) {
  x.validate();
  NIntegral r;
  r.value = mid_sum(h_T, x, 1);
  r.half_resolution = mid_sum(h_T, x, 2);
  r.refinement_diff = std::abs(r.value - r.half_resolution);
  r.coarse_warning = qv_N > 0.0 && r.refinement_diff > 0.01 * std::sqrt(qv_N);
  return r;
}

NFunctional::NFunctional(const std::function<double(double)>& h_T, const std::vector<double>& t,
                         unsigned threads)
    : times(t) {
  if (times.empty() || times[0] != 0.0) times.insert(times.begin(), 0.0);
  const std::size_t n = times.size() - 1;
  w_full.resize(static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    w_full[static_cast<Eigen::Index>(i)] = h_T(0.5 * (times[i] + times[i + 1]));
  }, threads);
  const std::size_t nh = (n + 1) / 2;
  w_half.resize(static_cast<Eigen::Index>(nh));
  parallel_for(nh, [&](std::size_t c) {
    const std::size_t i = 2 * c, j = std::min(i + 2, n);
    w_half[static_cast<Eigen::Index>(c)] = h_T(0.5 * (times[i] + times[j]));
  }, threads);
}

double NFunctional::full(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  double s = 0.0, prev = 0.0;
  for (Eigen::Index i = 0; i < w_full.size(); ++i) {
    s += w_full[i] * (v[i] - prev);
    prev = v[i];
  }
  return s;
}

double NFunctional::half(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  const Eigen::Index n = v.size();
  double s = 0.0, prev = 0.0;
  for (Eigen::Index c = 0; c < w_half.size(); ++c) {
    const Eigen::Index j = std::min<Eigen::Index>(2 * c + 2, n) - 1;
    s += w_half[c] * (v[j] - prev);
    prev = v[j];
  }
  return s;
}

EstimatorResult estimate_from(double n_T, double qv_N, double drift_norm, double sigma2_gamma2) {
  if (!(qv_N > 0.0)) throw DomainError("estimate: <N> must be positive");
  if (!(drift_norm > 0.0)) throw DomainError("estimate: drift normalisation must be positive");
  EstimatorResult r;
  r.n_T = n_T;
  r.qv_N = qv_N;
  r.drift_norm = drift_norm;
  r.theta_hat = n_T / (drift_norm * qv_N);
  r.variance_pred = 1.0 / (drift_norm * drift_norm * qv_N);
  // int_0^T h_T s^{1-2H1} ds = <N> / (sigma^2 gamma^2)
  r.variance_pred_paper = sigma2_gamma2 / qv_N;
  return r;
}

EstimatorResult mle(const FredholmSolution& sol, const SamplePath& x, const DerivedConstants& k) {
  x.validate();
  const double T = sol.horizon_T;
  if (std::abs(x.times.back() - T) > 1e-12 * T)
    throw DomainError("mle: path horizon does not match the solution's horizon");
  const double qv = sol.qv_N > 0.0 ? sol.qv_N : quadratic_variation_N(sol, k);
  const NIntegral n = stochastic_integral_N([&](double t) { return sol.h_T(t); }, x, qv);
  EstimatorResult r = estimate_from(n.value, qv, k.drift_norm, k.sigma * k.sigma * k.gamma2());
  r.n_detail = n;
  return r;
}

double log_likelihood(const EstimatorResult& r, double theta) {
  const double d = r.drift_norm;
  return theta * d * r.n_T - 0.5 * theta * theta * d * d * r.qv_N;
}

double EstimatorResult::loglik_at(double theta) const { return log_likelihood(*this, theta); }

}  // namespace mixfbm
