#include "mixfbm/gaussian_sim.hpp"

#include <algorithm>
#include <cmath>

#include "mixfbm/errors.hpp"
#include "mixfbm/kernels.hpp"
#include "mixfbm/numerics.hpp"
#include "mixfbm/parallel.hpp"

namespace mixfbm {

std::string to_string(PathLabel l) {
  switch (l) {
    case PathLabel::Z: return "Z";
    case PathLabel::Y: return "Y";
    case PathLabel::X: return "X";
    case PathLabel::X1: return "X1";
    case PathLabel::X2: return "X2";
    case PathLabel::fBm: return "fBm";
  }
  return "X";
}

PathLabel parse_label(const std::string& s) {
  for (PathLabel l : {PathLabel::Z, PathLabel::Y, PathLabel::X, PathLabel::X1, PathLabel::X2, PathLabel::fBm})
    if (s == to_string(l)) return l;
  if (s == "fbm") return PathLabel::fBm;
  throw DomainError("unknown path label '" + s + "'");
}

void SamplePath::validate() const {
  if (times.size() != values.size()) throw DomainError("SamplePath: times and values differ in length");
  if (times.size() < 2) throw DomainError("SamplePath: need at least two points");
  if (times[0] != 0.0) throw DomainError("SamplePath: times must start at 0");
  if (values[0] != 0.0) throw DomainError("SamplePath: value at time 0 must be 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("SamplePath: times must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("SamplePath: non-finite value");
}

double covariance_X(double t, double s, const DerivedConstants& k) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance_X: times must be nonnegative");
  if (t == 0.0 || s == 0.0) return 0.0;
  const double m = std::min(t, s);
  return k.sigma * k.sigma * k.epsilon_h1 * std::pow(m, 2.0 - 2.0 * k.hurst.h1) +
         KernelTables::get(k.hurst)->R(t, s);
}

double covariance_fbm(double H, double t, double s) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance_fbm: times must be nonnegative");
  return 0.5 * (std::pow(t, 2.0 * H) + std::pow(s, 2.0 * H) - std::pow(std::abs(t - s), 2.0 * H));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

SamplePath with_origin(const std::vector<double>& times, const Eigen::VectorXd& v, PathLabel l) {
  SamplePath p;
  p.label = l;
  p.times.reserve(times.size() + 1);
  p.values.reserve(times.size() + 1);
  p.times.push_back(0.0);
  p.values.push_back(0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    p.times.push_back(times[i]);
    p.values.push_back(v[static_cast<Eigen::Index>(i)]);
  }
  return p;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) {
  return splitmix64(splitmix64(master) ^ splitmix64(replicate + 0x632BE59BD9B4E019ull));
}

std::vector<double> positive_times(const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i == 0 && times[i] == 0.0) continue;
    if (!(times[i] > 0.0)) throw DomainError("time grid: points must be positive");
    if (!out.empty() && !(times[i] > out.back())) throw DomainError("time grid: must be strictly increasing");
    out.push_back(times[i]);
  }
  if (out.empty()) throw DomainError("time grid: empty");
  return out;
}

std::vector<double> uniform_grid(double T, int n) {
  if (!(T > 0.0) || n < 1) throw DomainError("uniform_grid: need T > 0 and n >= 1");
  std::vector<double> t(n + 1);
  for (int i = 0; i <= n; ++i) t[i] = T * i / n;
  t[n] = T;
  return t;
}

// ---------------------------------------------------------------------------

void CovarianceModel::factorize() {
  const Eigen::Index n = matrix.rows();
  const double scale = matrix.trace() / static_cast<double>(n);
  double add = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd m = matrix;
    if (add > 0.0) m.diagonal().array() += add;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      chol = llt.matrixL();
      jitter = add;
      return;
    }
    add = add == 0.0 ? 1e-12 * scale : add * 100.0;
  }
  throw AccuracyError("covariance factorization failed after 3 jitter attempts");
}

double CovarianceModel::factor_error() const {
  const Eigen::MatrixXd d = chol * chol.transpose() - matrix;
  return d.norm() / matrix.norm();
}

SamplePath CovarianceModel::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> nd;
  Eigen::VectorXd g(chol.rows());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = nd(rng);
  const Eigen::VectorXd v = chol.triangularView<Eigen::Lower>() * g + drift;
  return with_origin(times, v, label);
}

SamplePath CovarianceModel::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return sample(rng);
}

Eigen::MatrixXd CovarianceModel::sample_batch(std::uint64_t master, std::uint64_t first,
                                              std::size_t count, unsigned threads) const {
  const Eigen::Index n = chol.rows();
  Eigen::MatrixXd g(n, static_cast<Eigen::Index>(count));
  parallel_for(count, [&](std::size_t c) {
    std::mt19937_64 rng(replicate_seed(master, first + c));
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < n; ++i) g(i, static_cast<Eigen::Index>(c)) = nd(rng);
  }, threads);
  Eigen::MatrixXd out = chol.triangularView<Eigen::Lower>() * g;
  out.colwise() += drift;
  return out;
}

CovarianceModel covariance_model_X(const std::vector<double>& times, const DerivedConstants& k,
                                   double theta) {
  CovarianceModel cm;
  cm.times = positive_times(times);
  const Eigen::Index n = static_cast<Eigen::Index>(cm.times.size());
  cm.matrix.resize(n, n);
  auto tab = KernelTables::get(k.hurst);
  const double e = 2.0 - 2.0 * k.hurst.h1, c1 = k.sigma * k.sigma * k.epsilon_h1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double t = cm.times[i], s = cm.times[j];
      cm.matrix(i, j) = cm.matrix(j, i) = c1 * std::pow(s, e) + tab->R(t, s);
    }
  cm.drift.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) cm.drift[i] = theta * k.script_b * std::pow(cm.times[i], e);
  cm.label = theta == 0.0 ? PathLabel::X : PathLabel::Y;
  cm.factorize();
  return cm;
}

CovarianceModel covariance_model_fbm(double H, const std::vector<double>& times) {
  if (!(H > 0.0 && H < 1.0)) throw DomainError("simulate_fbm: H must lie in (0,1)");
  CovarianceModel cm;
  cm.times = positive_times(times);
  const Eigen::Index n = static_cast<Eigen::Index>(cm.times.size());
  cm.matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      cm.matrix(i, j) = cm.matrix(j, i) = covariance_fbm(H, cm.times[i], cm.times[j]);
  cm.drift = Eigen::VectorXd::Zero(n);
  cm.label = PathLabel::fBm;
  cm.factorize();
  return cm;
}

SamplePath simulate_X(const std::vector<double>& times, std::uint64_t seed, const DerivedConstants& k) {
  return covariance_model_X(times, k, 0.0).sample(seed);
}

SamplePath simulate_Y(const std::vector<double>& times, std::uint64_t seed, double theta,
                      const DerivedConstants& k) {
  SamplePath p = covariance_model_X(times, k, theta).sample(seed);
  p.label = PathLabel::Y;
  return p;
}

SamplePath simulate_fbm(double H, const std::vector<double>& times, std::uint64_t seed) {
  return covariance_model_fbm(H, times).sample(seed);
}

SamplePath simulate_Z(const std::vector<double>& times, std::uint64_t seed, double theta,
                      const DerivedConstants& k) {
  const SamplePath b1 = simulate_fbm(k.hurst.h1, times, replicate_seed(seed, 1));
  const SamplePath b2 = simulate_fbm(k.hurst.h2, times, replicate_seed(seed, 2));
  SamplePath z = b1;
  z.label = PathLabel::Z;
  for (std::size_t i = 0; i < z.size(); ++i)
    z.values[i] = theta * z.times[i] + k.sigma * b1.values[i] + b2.values[i];
  return z;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kCellNodes = 12;

struct RefRule {
  std::vector<double> x, w;
};

RefRule ref_rule(double p, double q) {
  const QuadratureRule r = jacobi_rule(kCellNodes, p, q, 0.0, 1.0);
  return {r.nodes, r.weights};
}

// int_a^b f over a reference rule with weight (x-a)^p (b-x)^q
template <class F>
double cell(const RefRule& r, double a, double b, double p, double q, F&& f) {
  const double h = b - a, scale = std::pow(h, 1.0 + p + q);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(a + h * r.x[i]);
  return scale * s;
}

void check_h1(double h1) {
  if (!(h1 > 0.5 && h1 < 1.0)) throw DomainError("transform: H1 must lie in (1/2,1)");
}

}  // namespace

Eigen::MatrixXd molchan_matrix(const std::vector<double>& times, double h1, unsigned threads) {
  check_h1(h1);
  std::vector<double> t = positive_times(times);
  t.insert(t.begin(), 0.0);
  const int n = static_cast<int>(t.size()) - 1;
  const double a = 0.5 - h1;  // kernel power, negative
  const RefRule both = ref_rule(a, a), left = ref_rule(a, 0.0), right = ref_rule(0.0, a),
                plain = ref_rule(0.0, 0.0);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
    const int j = static_cast<int>(jj) + 1;
    const double tj = t[j];
    for (int k = 0; k < j; ++k) {
      const double lo = t[k], hi = t[k + 1];
      double A;
      if (k == 0 && k + 1 == j)
        A = cell(both, lo, hi, a, a, [](double) { return 1.0; });
      else if (k == 0)
        A = cell(left, lo, hi, a, 0.0, [&](double s) { return std::pow(tj - s, a); });
      else if (k + 1 == j)
        A = cell(right, lo, hi, 0.0, a, [&](double s) { return std::pow(s, a); });
      else
        A = cell(plain, lo, hi, 0.0, 0.0, [&](double s) { return std::pow((tj - s) * s, a); });
      const double c = A / (hi - lo);
      M(j - 1, k) += c;
      if (k >= 1) M(j - 1, k - 1) -= c;
    }
  }, threads);
  return M;
}

Eigen::MatrixXd inverse_matrix(const std::vector<double>& times, double h1, unsigned threads) {
  check_h1(h1);
  std::vector<double> t = positive_times(times);
  t.insert(t.begin(), 0.0);
  const int n = static_cast<int>(t.size()) - 1;
  const double al = h1 - 0.5;
  const double norm = 1.0 / (al * beta_fn(al, 1.0 - al));
  const RefRule at0 = ref_rule(2.0 * al, 0.0), atk = ref_rule(al, 0.0), plain = ref_rule(0.0, 0.0);
  // F(k,j) = int_{t_k}^{t_j} u^al (u - t_k)^al du, row k, j > k
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n + 1, n + 1);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const double tk = t[k];
    double acc = 0.0;
    for (int m = k; m < n; ++m) {
      const double lo = t[m], hi = t[m + 1];
      double g;
      if (m == k && k == 0)
        g = cell(at0, lo, hi, 2.0 * al, 0.0, [](double) { return 1.0; });
      else if (m == k)
        g = cell(atk, lo, hi, al, 0.0, [&](double u) { return std::pow(u, al); });
      else
        g = cell(plain, lo, hi, 0.0, 0.0, [&](double u) { return std::pow(u * (u - tk), al); });
      acc += g;
      F(k, m + 1) = acc;
    }
  }, threads);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j <= n; ++j)
    for (int k = 0; k < j; ++k) {
      const double c = norm * (F(k, j) - F(k + 1, j)) / (t[k + 1] - t[k]);
      W(j - 1, k) += c;
      if (k >= 1) W(j - 1, k - 1) -= c;
    }
  return W;
}

namespace {

SamplePath apply_map(const SamplePath& in, const Eigen::MatrixXd& M, PathLabel out_label) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(in.size()) - 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = in.values[static_cast<std::size_t>(i) + 1];
  const Eigen::VectorXd r = M * v;
  std::vector<double> pos(in.times.begin() + 1, in.times.end());
  return with_origin(pos, r, out_label);
}

void check_fine(const SamplePath& p, const char* who) {
  p.validate();
  if (p.size() < 33)
    throw AccuracyError(std::string(who) + ": grid too coarse (need at least 32 points after 0)");
}

}  // namespace

SamplePath molchan_transform(const SamplePath& z, const DerivedConstants& k) {
  check_fine(z, "molchan_transform");
  const PathLabel out = z.label == PathLabel::fBm ? PathLabel::X1 : PathLabel::Y;
  return apply_map(z, molchan_matrix(z.times, k.hurst.h1), out);
}

SamplePath inverse_transform(const SamplePath& y, const DerivedConstants& k) {
  check_fine(y, "inverse_transform");
  return apply_map(y, inverse_matrix(y.times, k.hurst.h1), PathLabel::Z);
}

}  // namespace mixfbm
