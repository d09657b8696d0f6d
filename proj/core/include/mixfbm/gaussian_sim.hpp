#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixfbm/model.hpp"

namespace mixfbm {

enum class PathLabel { Z, Y, X, X1, X2, fBm };
std::string to_string(PathLabel l);
PathLabel parse_label(const std::string& s);

// times[0] == 0 and values[0] == 0 for every process here.
struct SamplePath {
  std::vector<double> times;
  std::vector<double> values;
  PathLabel label = PathLabel::X;

  void validate() const;
  std::size_t size() const { return times.size(); }
};

// sigma^2 eps (t^s)^{2-2H1} + R(t,s), the covariance of sigma X1 + X2
double covariance_X(double t, double s, const DerivedConstants& k);
double covariance_fbm(double H, double t, double s);

// Independent stream per (master, replicate); splitmix64 finaliser on both.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate);

// Positive times (the origin is implicit).  Accepts a grid that starts at 0.
std::vector<double> positive_times(const std::vector<double>& times);

struct CovarianceModel {
  std::vector<double> times;  // positive grid
  Eigen::MatrixXd matrix;
  Eigen::VectorXd drift;
  Eigen::MatrixXd chol;       // lower triangular
  double jitter = 0.0;        // added to the diagonal, 0 if none was needed
  PathLabel label = PathLabel::X;

  void factorize();
  // chol * N(0,I) + drift, origin prepended
  SamplePath sample(std::mt19937_64& rng) const;
  SamplePath sample(std::uint64_t seed) const;
  // columns are replicates first..first+count-1 of `master`; rows exclude the origin
  Eigen::MatrixXd sample_batch(std::uint64_t master, std::uint64_t first, std::size_t count,
                               unsigned threads = 0) const;
  double factor_error() const;  // ||L L^T - C||_F / ||C||_F
};

CovarianceModel covariance_model_X(const std::vector<double>& times, const DerivedConstants& k,
                                   double theta = 0.0);
CovarianceModel covariance_model_fbm(double H, const std::vector<double>& times);

SamplePath simulate_X(const std::vector<double>& times, std::uint64_t seed, const DerivedConstants& k);
SamplePath simulate_Y(const std::vector<double>& times, std::uint64_t seed, double theta,
                      const DerivedConstants& k);
SamplePath simulate_fbm(double H, const std::vector<double>& times, std::uint64_t seed);
// theta t + sigma B^{H1} + B^{H2} from two independent fBm draws
SamplePath simulate_Z(const std::vector<double>& times, std::uint64_t seed, double theta,
                      const DerivedConstants& k);

// Linear maps between piecewise-linear paths on a common grid (origin excluded
// from rows and columns).  Exact per cell up to Gauss rules of 12 nodes.
//   forward:  Y(t) = int_0^t (t-s)^{1/2-H1} s^{1/2-H1} dZ(s)
//   inverse:  Z(t) = B(H1-1/2,3/2-H1)^{-1} int_0^t int_s^t (u-s)^{H1-3/2} u^{H1-1/2} du dY(s)
Eigen::MatrixXd molchan_matrix(const std::vector<double>& times, double h1, unsigned threads = 0);
Eigen::MatrixXd inverse_matrix(const std::vector<double>& times, double h1, unsigned threads = 0);

SamplePath molchan_transform(const SamplePath& z, const DerivedConstants& k);
SamplePath inverse_transform(const SamplePath& y, const DerivedConstants& k);

// uniform grid on [0,T] with n points after the origin
std::vector<double> uniform_grid(double T, int n);

}  // namespace mixfbm
