#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mixfbm/kernels.hpp"
#include "mixfbm/model.hpp"

namespace mixfbm {

// Doubly graded panels on [0,1], four Gauss-Legendre nodes per panel.
struct QuadratureGrid {
  int n = 0;
  int per_panel = 4;
  double grading_exponent = 3.0;
  std::vector<double> breaks;  // panels()+1 entries, 0 ... 1
  std::vector<double> nodes;
  std::vector<double> weights;

  int panels() const { return static_cast<int>(breaks.size()) - 1; }
  int panel_of(double x) const;
};

QuadratureGrid build_grid(int n, double grading_exponent = 3.0);

// Kernel on [0,1]^2 together with the exponents of its singular structure:
//   ~ |s-u|^diag_exp on the diagonal, ~ s^zero_exp as s -> 0.
struct KernelSpec {
  std::function<double(double, double)> k1;  // (s, u)
  double diag_exp = 0.0;
  double zero_exp = 0.0;
};

struct AssembleOptions {
  int sub_nodes = 10;       // Gauss nodes per sub-panel in product rules
  int sub_depth = 24;       // geometric levels toward a singular point
  bool residual_check = true;
  bool eigen_diagnostic = true;
  unsigned threads = 0;
};

// Product-integration collocation:  matrix(i,j) = int_0^1 k1(s,u_i) b_j(s) ds
// where b_j are the panel Lagrange polynomials (on the first panel multiplied
// by (s/s_j)^{basis_exp} so that s^{basis_exp} behaviour is reproduced).
struct DiscretizedOperator {
  QuadratureGrid grid;
  KernelSpec kernel;
  HurstPair hurst;
  bool tabulated = false;   // kernel is the model's k1 (energy form available)
  double basis_exp = 0.0;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd basis_integrals;  // int b_j
  Eigen::VectorXd moments;          // int b_j(s) s^{basis_exp} ds
  Eigen::MatrixXd mass;             // int b_j b_l
  AssembleOptions options;

  // residual machinery (independent of T)
  std::shared_ptr<const DiscretizedOperator> refined;  // same kernel on 2n nodes
  std::vector<double> check_points;
  Eigen::MatrixXd rows_check_coarse, rows_check_fine, rows_finenodes_coarse,
      rows_nodes_fine;
  Eigen::VectorXcd eigenvalues;  // of `matrix`, for the eigenvalue-proximity diagnostic

  Eigen::RowVectorXd row(double u) const;
  double basis(int j, double s) const;
  // sum_j c_j b_j(s)
  double expand(const Eigen::VectorXd& c, double s) const;
  double asymmetry() const;  // max |(MA - (MA)^T)_ij| / max |MA|
};

using OperatorPtr = std::shared_ptr<const DiscretizedOperator>;

// int_0^1 k1(s,u) f(s) ds with the grid's panels as composite breakpoints;
// f ~ s^{f_exp0} at 0 and ~ (1-s)^{f_exp1} at 1.
double integrate_against_kernel(const KernelSpec& kernel, const QuadratureGrid& grid,
                                const std::function<double(double)>& f, double f_exp0,
                                double f_exp1, double u, int sub_nodes = 10, int sub_depth = 24);

KernelSpec model_kernel(const HurstPair& hp);
OperatorPtr assemble(const KernelContext& ctx, const QuadratureGrid& grid,
                     const AssembleOptions& opt = {});
// test seam: arbitrary kernel on the same discretization
OperatorPtr assemble_custom(const KernelSpec& kernel, const QuadratureGrid& grid,
                            double basis_exp, const AssembleOptions& opt = {});

struct SolverOptions {
  double residual_tol = 1e-4;
  bool strict = false;  // throw AccuracyError instead of flagging
  double max_condition = 1e12;
};

struct FredholmSolution {
  QuadratureGrid grid;
  Eigen::VectorXd h_hat;
  double horizon_T = 1.0;
  double h1 = 0.6;
  double lambda = 0.0;
  double residual_sup = 0.0;      // off-grid, relative to rhs
  double residual_on_grid = 0.0;  // same measure at the nodes
  double qv_N = 0.0;
  double condition = 1.0;
  double eigen_margin = 1.0;      // min |1 + lambda kappa| over the operator spectrum
  bool flagged = false;
  OperatorPtr op;

  double rhs(double u) const;
  double h_hat_at(double u) const;  // Nystrom interpolation
  double h_T(double t) const;       // unscaled weight on (0,T]
  double weighted_integral() const; // int_0^1 h_hat(s) s^{1/2-H1} ds
};

FredholmSolution solve_second_kind(const OperatorPtr& op, double T, const DerivedConstants& c,
                                   const SolverOptions& opt = {});
// lambda given directly (test seam)
FredholmSolution solve_second_kind_lambda(const OperatorPtr& op, double T, double lambda,
                                          double h1, const SolverOptions& opt = {});

std::function<double(double)> unscale(const FredholmSolution& sol);
double quadratic_variation_N(const FredholmSolution& sol, const DerivedConstants& c);

// Symmetric Galerkin (energy) matrix G_jl = <K b_j, b_l>, built as B^T W B
// from the factorisation k1 = int dK dK, hence positive semidefinite.
struct EnergyForm {
  Eigen::MatrixXd G;
  Eigen::MatrixXd M;
};
EnergyForm energy_form(const DiscretizedOperator& op);
// M^{-1/2} G M^{-1/2}
Eigen::MatrixXd symmetrized(const DiscretizedOperator& op);
// generalized eigenvalues of (G, M), descending
std::vector<double> spectrum_report(const DiscretizedOperator& op);

// weighted L2 distance ||a - b|| / ||b|| on b's grid (a interpolated)
double relative_l2_difference(const FredholmSolution& a, const FredholmSolution& b);

}  // namespace mixfbm
