#include "mixfbm/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "mixfbm/errors.hpp"
#include "mixfbm/numerics.hpp"
#include "mixfbm/parallel.hpp"

namespace mixfbm {

int QuadratureGrid::panel_of(double x) const {
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  const int p = static_cast<int>(it - breaks.begin()) - 1;
  return std::clamp(p, 0, panels() - 1);
}

QuadratureGrid build_grid(int n, double grading_exponent) {
  if (n < 8) throw DomainError("build_grid: n must be >= 8");
  if (n % 4 != 0) throw DomainError("build_grid: n must be a multiple of 4");
  if (!(grading_exponent >= 1.0)) throw DomainError("build_grid: grading exponent must be >= 1");
  QuadratureGrid g;
  g.n = n;
  g.grading_exponent = grading_exponent;
  const int m = n / g.per_panel;
  g.breaks.resize(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double x = static_cast<double>(i) / m;
    const double a = std::pow(x, grading_exponent), b = std::pow(1.0 - x, grading_exponent);
    g.breaks[i] = a / (a + b);
  }
  const QuadratureRule gl = legendre_rule(g.per_panel, 0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    const double c = g.breaks[i], h = g.breaks[i + 1] - c;
    for (int j = 0; j < g.per_panel; ++j) {
      g.nodes.push_back(c + h * gl.nodes[j]);
      g.weights.push_back(h * gl.weights[j]);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

// Lagrange values of the panel's basis at x
void local_basis(const QuadratureGrid& g, int panel, double basis_exp, double x, double* out) {
  const int P = g.per_panel;
  const double* nd = &g.nodes[panel * P];
  for (int j = 0; j < P; ++j) {
    double v = 1.0;
    for (int k = 0; k < P; ++k)
      if (k != j) v *= (x - nd[k]) / (nd[j] - nd[k]);
    if (panel == 0 && basis_exp != 0.0) v *= std::pow(x / nd[j], basis_exp);
    out[j] = v;
  }
}

void fill_static_integrals(DiscretizedOperator& op) {
  const auto& g = op.grid;
  const int n = g.n, P = g.per_panel;
  op.basis_integrals = Eigen::VectorXd::Zero(n);
  op.moments = Eigen::VectorXd::Zero(n);
  op.mass = Eigen::MatrixXd::Zero(n, n);
  const double e = op.basis_exp;
  std::vector<double> bv(P);
  for (int p = 0; p < g.panels(); ++p) {
    const double c = g.breaks[p], d = g.breaks[p + 1];
    const int j0 = p * P;
    if (p == 0 && e != 0.0) {
      // weight s^e for int b_j, s^{2e} for moments and mass
      const double* nd = &g.nodes[0];
      const QuadratureRule r1 = jacobi_rule(8, e, 0.0, c, d);
      const QuadratureRule r2 = jacobi_rule(8, 2.0 * e, 0.0, c, d);
      for (std::size_t q = 0; q < r1.size(); ++q) {
        local_basis(g, 0, 0.0, r1.nodes[q], bv.data());
        for (int j = 0; j < P; ++j) op.basis_integrals[j0 + j] += r1.weights[q] * bv[j] / std::pow(nd[j], e);
      }
      for (std::size_t q = 0; q < r2.size(); ++q) {
        local_basis(g, 0, 0.0, r2.nodes[q], bv.data());
        for (int j = 0; j < P; ++j) {
          const double bj = bv[j] / std::pow(nd[j], e);
          op.moments[j0 + j] += r2.weights[q] * bj;
          for (int l = 0; l < P; ++l) op.mass(j0 + j, j0 + l) += r2.weights[q] * bj * bv[l] / std::pow(nd[l], e);
        }
      }
    } else {
      const QuadratureRule r = legendre_rule(8, c, d);
      for (std::size_t q = 0; q < r.size(); ++q) {
        const double x = r.nodes[q], w = r.weights[q];
        local_basis(g, p, e, x, bv.data());
        for (int j = 0; j < P; ++j) {
          op.basis_integrals[j0 + j] += w * bv[j];
          op.moments[j0 + j] += w * bv[j] * std::pow(x, e);
          for (int l = 0; l < P; ++l) op.mass(j0 + j, j0 + l) += w * bv[j] * bv[l];
        }
      }
    }
  }
}

Eigen::MatrixXd rows_at(const DiscretizedOperator& op, const std::vector<double>& us, unsigned threads) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(us.size()), op.grid.n);
  parallel_for(us.size(), [&](std::size_t i) { out.row(static_cast<Eigen::Index>(i)) = op.row(us[i]); }, threads);
  return out;
}

OperatorPtr build_operator(const KernelSpec& kernel, const QuadratureGrid& grid, double basis_exp,
                           const HurstPair& hp, bool tabulated, const AssembleOptions& opt) {
  auto op = std::make_shared<DiscretizedOperator>();
  op->grid = grid;
  op->kernel = kernel;
  op->hurst = hp;
  op->tabulated = tabulated;
  op->basis_exp = basis_exp;
  op->options = opt;
  fill_static_integrals(*op);
  op->matrix = rows_at(*op, grid.nodes, opt.threads);
  if (!op->matrix.allFinite()) throw AccuracyError("assemble: non-finite matrix entry");
  if (opt.eigen_diagnostic) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(op->matrix, false);
    op->eigenvalues = es.eigenvalues();
  }
  if (opt.residual_check) {
    AssembleOptions sub = opt;
    sub.residual_check = false;
    sub.eigen_diagnostic = false;
    op->refined = build_operator(kernel, build_grid(2 * grid.n, grid.grading_exponent), basis_exp, hp,
                                 tabulated, sub);
    for (int i = 0; i + 1 < grid.n; ++i) {
      const double a = grid.nodes[i], b = grid.nodes[i + 1];
      for (double f : {0.25, 0.5, 0.75}) op->check_points.push_back(a + f * (b - a));
    }
    op->rows_check_coarse = rows_at(*op, op->check_points, opt.threads);
    op->rows_check_fine = rows_at(*op->refined, op->check_points, opt.threads);
    op->rows_finenodes_coarse = rows_at(*op, op->refined->grid.nodes, opt.threads);
    op->rows_nodes_fine = rows_at(*op->refined, grid.nodes, opt.threads);
  }
  return op;
}

}  // namespace

double DiscretizedOperator::basis(int j, double s) const {
  const int p = j / grid.per_panel;
  if (s < grid.breaks[p] || s > grid.breaks[p + 1]) return 0.0;
  double bv[16];
  local_basis(grid, p, basis_exp, s, bv);
  return bv[j % grid.per_panel];
}

double DiscretizedOperator::expand(const Eigen::VectorXd& c, double s) const {
  const int p = grid.panel_of(s);
  double bv[16];
  local_basis(grid, p, basis_exp, s, bv);
  double acc = 0.0;
  for (int j = 0; j < grid.per_panel; ++j) acc += c[p * grid.per_panel + j] * bv[j];
  return acc;
}

namespace {

// sub-interval rule for  int_a^b k1(s,u) g(s) ds,  g ~ s^{extra0} at s=0
QuadratureRule kernel_subrule(const KernelSpec& kernel, double a, double b, double u, double extra0,
                              double extra1_at_one, int m, int depth) {
  GradedSpec g;
  g.m = m;
  g.max_depth = depth;
  if (kernel.diag_exp != 0.0) {
    if (a == u) {
      g.p += kernel.diag_exp;
      g.near_a = 0.0;
    } else if (a > u && a - u < b - a) {
      g.near_a = a - u;
    }
    if (b == u) {
      g.q += kernel.diag_exp;
      g.near_b = 0.0;
    } else if (b < u && u - b < b - a) {
      g.near_b = u - b;
    }
  }
  if (a == 0.0) {
    g.p += kernel.zero_exp + extra0;
    if (g.p != 0.0 && g.near_a < 0.0) g.near_a = 1e-6 * (b - a);
  }
  if (b == 1.0 && extra1_at_one != 0.0) {
    g.q += extra1_at_one;
    if (g.near_b < 0.0) g.near_b = 1e-6 * (b - a);
  }
  return graded_rule(a, b, g);
}

template <class Visit>
void for_each_subinterval(const QuadratureGrid& grid, double u, Visit&& visit) {
  for (int p = 0; p < grid.panels(); ++p) {
    const double c = grid.breaks[p], d = grid.breaks[p + 1];
    if (c < u && u < d) {
      visit(p, c, u);
      visit(p, u, d);
    } else {
      visit(p, c, d);
    }
  }
}

}  // namespace

Eigen::RowVectorXd DiscretizedOperator::row(double u) const {
  const int P = grid.per_panel;
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(grid.n);
  double bv[16];
  for_each_subinterval(grid, u, [&](int p, double a, double b) {
    const QuadratureRule r = kernel_subrule(kernel, a, b, u, p == 0 ? basis_exp : 0.0, 0.0,
                                            options.sub_nodes, options.sub_depth);
    for (std::size_t q = 0; q < r.size(); ++q) {
      const double x = r.nodes[q];
      const double kw = r.weights[q] * kernel.k1(x, u);
      local_basis(grid, p, basis_exp, x, bv);
      for (int j = 0; j < P; ++j) out[p * P + j] += kw * bv[j];
    }
  });
  return out;
}

double integrate_against_kernel(const KernelSpec& kernel, const QuadratureGrid& grid,
                                const std::function<double(double)>& f, double f_exp0,
                                double f_exp1, double u, int sub_nodes, int sub_depth) {
  double acc = 0.0;
  for_each_subinterval(grid, u, [&](int, double a, double b) {
    const QuadratureRule r = kernel_subrule(kernel, a, b, u, f_exp0, f_exp1, sub_nodes, sub_depth);
    for (std::size_t q = 0; q < r.size(); ++q) acc += r.weights[q] * kernel.k1(r.nodes[q], u) * f(r.nodes[q]);
  });
  return acc;
}

double DiscretizedOperator::asymmetry() const {
  Eigen::MatrixXd DA = Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), grid.n).asDiagonal() * matrix;
  const double scale = DA.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (DA - DA.transpose()).cwiseAbs().maxCoeff() / scale;
}

OperatorPtr assemble(const KernelContext& ctx, const QuadratureGrid& grid, const AssembleOptions& opt) {
  const HurstPair hp = ctx.constants.hurst;
  if (!hp.solver_admissible())
    throw DomainError("assemble: requires h2 - h1 > 1/4 (square integrable kernel)");
  return build_operator(model_kernel(hp), grid, 0.5 - hp.h1, hp, true, opt);
}

KernelSpec model_kernel(const HurstPair& hp) {
  auto tab = KernelTables::get(hp);
  KernelSpec ks;
  ks.k1 = [tab](double s, double u) { return tab->k1(s, u); };
  ks.diag_exp = tab->beta_exp() - 1.0;
  ks.zero_exp = 0.5 - hp.h1;
  return ks;
}

OperatorPtr assemble_custom(const KernelSpec& kernel, const QuadratureGrid& grid, double basis_exp,
                            const AssembleOptions& opt) {
  HurstPair hp;
  hp.h1 = 0.5 - basis_exp;
  hp.h2 = std::max(hp.h1 + 0.3, 0.9);
  return build_operator(kernel, grid, basis_exp, hp, false, opt);
}

// ---------------------------------------------------------------------------

double FredholmSolution::rhs(double u) const { return std::pow(u * horizon_T, 0.5 - h1); }

double FredholmSolution::h_hat_at(double u) const {
  if (!(u > 0.0) || u > 1.0) throw DomainError("h_hat_at: u must lie in (0,1]");
  return rhs(u) - lambda * op->row(u).dot(h_hat);
}

double FredholmSolution::h_T(double t) const {
  if (!(t > 0.0) || t > horizon_T) throw DomainError("h_T: t must lie in (0,T]");
  return h_hat_at(t / horizon_T) * std::pow(t, h1 - 0.5);
}

double FredholmSolution::weighted_integral() const { return op->moments.dot(h_hat); }

FredholmSolution solve_second_kind_lambda(const OperatorPtr& op, double T, double lambda, double h1,
                                          const SolverOptions& opt) {
  if (!(T > 0.0)) throw DomainError("solve_second_kind: T must be positive");
  FredholmSolution sol;
  sol.grid = op->grid;
  sol.horizon_T = T;
  sol.h1 = h1;
  sol.lambda = lambda;
  sol.op = op;
  const int n = op->grid.n;
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = sol.rhs(op->grid.nodes[i]);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + lambda * op->matrix;
  DenseSolve ds;
  try {
    ds = solve_dense(A, rhs, opt.max_condition);
  } catch (const IllConditioned& e) {
    throw IllConditioned("solve_second_kind: 1 + lambda*kappa is close to zero for some eigenvalue "
                         "kappa of the operator; choose another horizon",
                         e.condition);
  }
  sol.h_hat = ds.x;
  sol.condition = ds.condition;

  double margin = 1.0;
  for (Eigen::Index k = 0; k < op->eigenvalues.size(); ++k)
    margin = std::min(margin, std::abs(1.0 + lambda * op->eigenvalues[k]));
  sol.eigen_margin = margin;

  if (op->refined) {
    const auto& fine = *op->refined;
    Eigen::VectorXd rhs_f(fine.grid.n);
    for (int i = 0; i < fine.grid.n; ++i) rhs_f[i] = sol.rhs(fine.grid.nodes[i]);
    const Eigen::VectorXd h_f = rhs_f - lambda * (op->rows_finenodes_coarse * sol.h_hat);
    const Eigen::VectorXd rc = lambda * (op->rows_check_fine * h_f - op->rows_check_coarse * sol.h_hat);
    double sup = 0.0;
    for (Eigen::Index k = 0; k < rc.size(); ++k)
      sup = std::max(sup, std::abs(rc[k]) / std::abs(sol.rhs(op->check_points[k])));
    sol.residual_sup = sup;
    const Eigen::VectorXd rg = sol.h_hat + lambda * (op->rows_nodes_fine * h_f) - rhs;
    double on = 0.0;
    for (int i = 0; i < n; ++i) on = std::max(on, std::abs(rg[i]) / std::abs(rhs[i]));
    sol.residual_on_grid = on;
    sol.flagged = sol.residual_sup > opt.residual_tol;
    if (sol.flagged && opt.strict)
      throw AccuracyError("solve_second_kind: off-grid residual above tolerance");
  }
  return sol;
}

FredholmSolution solve_second_kind(const OperatorPtr& op, double T, const DerivedConstants& c,
                                   const SolverOptions& opt) {
  if (op->tabulated && (op->hurst.h1 != c.hurst.h1 || op->hurst.h2 != c.hurst.h2))
    throw DomainError("solve_second_kind: operator assembled for a different Hurst pair");
  FredholmSolution sol = solve_second_kind_lambda(op, T, c.lambda_of_T(T), c.hurst.h1, opt);
  sol.qv_N = quadratic_variation_N(sol, c);
  return sol;
}

std::function<double(double)> unscale(const FredholmSolution& sol) {
  return [sol](double t) { return sol.h_T(t); };
}

double quadratic_variation_N(const FredholmSolution& sol, const DerivedConstants& c) {
  const double v = c.sigma * c.sigma * c.gamma2() * std::pow(sol.horizon_T, 1.5 - c.hurst.h1) *
                   sol.weighted_integral();
  if (!(v > 0.0)) throw AccuracyError("quadratic_variation_N: nonpositive result");
  return v;
}

// ---------------------------------------------------------------------------

EnergyForm energy_form(const DiscretizedOperator& op) {
  EnergyForm ef;
  ef.M = op.mass;
  const auto& g = op.grid;
  const int n = g.n, P = g.per_panel;
  if (!op.tabulated) {
    // no factorisation available: Galerkin surrogate from the collocation matrix
    Eigen::MatrixXd MA = op.mass * op.matrix;
    ef.G = 0.5 * (MA + MA.transpose());
    return ef;
  }
  auto tab = KernelTables::get(op.hurst);
  const double h1 = op.hurst.h1, h2 = op.hurst.h2;
  // outer rule in v
  std::vector<double> vs, ws;
  for (int p = 0; p < g.panels(); ++p) {
    const double c = g.breaks[p], d = g.breaks[p + 1];
    GradedSpec s;
    s.m = 8;
    s.near_a = (d - c) / 16.0;
    s.near_b = (d - c) / 16.0;
    if (p == 0) {
      s.p = 1.0 - 2.0 * h2;
      s.near_a = 1e-6 * (d - c);
    }
    const QuadratureRule r = graded_rule(c, d, s);
    vs.insert(vs.end(), r.nodes.begin(), r.nodes.end());
    ws.insert(ws.end(), r.weights.begin(), r.weights.end());
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vs.size()), n);
  const double diag = h2 - h1 - 1.0;
  parallel_for(vs.size(), [&](std::size_t q) {
    const double v = vs[q];
    double bv[16];
    for (int p = g.panel_of(v); p < g.panels(); ++p) {
      const double a = std::max(g.breaks[p], v), b = g.breaks[p + 1];
      if (!(b > a)) continue;
      GradedSpec s;
      s.m = op.options.sub_nodes;
      s.max_depth = op.options.sub_depth;
      if (a == v) {
        s.p = diag;
        s.near_a = 0.0;
      } else if (a - v < b - a) {
        s.near_a = a - v;
      }
      const QuadratureRule r = graded_rule(a, b, s);
      for (std::size_t k = 0; k < r.size(); ++k) {
        const double x = r.nodes[k];
        const double f = r.weights[k] * tab->dK12(x, v) * std::pow(x, h1 - 0.5);
        local_basis(g, p, op.basis_exp, x, bv);
        for (int j = 0; j < P; ++j) B(static_cast<Eigen::Index>(q), p * P + j) += f * bv[j];
      }
    }
  }, op.options.threads);
  const Eigen::VectorXd W = Eigen::Map<const Eigen::VectorXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
  ef.G = B.transpose() * W.asDiagonal() * B;
  ef.G = 0.5 * (ef.G + ef.G.transpose());
  return ef;
}

Eigen::MatrixXd symmetrized(const DiscretizedOperator& op) {
  const EnergyForm ef = energy_form(op);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ef.M);
  const Eigen::MatrixXd Mih = es.operatorInverseSqrt();
  Eigen::MatrixXd S = Mih * ef.G * Mih;
  return 0.5 * (S + S.transpose());
}

std::vector<double> spectrum_report(const DiscretizedOperator& op) {
  const EnergyForm ef = energy_form(op);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ef.G, ef.M, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), std::greater<double>());
  return ev;
}

double relative_l2_difference(const FredholmSolution& a, const FredholmSolution& b) {
  double num = 0.0, den = 0.0;
  for (int j = 0; j < b.grid.n; ++j) {
    const double u = b.grid.nodes[j], w = b.grid.weights[j];
    const double d = a.h_hat_at(u) - b.h_hat[j];
    num += w * d * d;
    den += w * b.h_hat[j] * b.h_hat[j];
  }
  return std::sqrt(num / den);
}

}  // namespace mixfbm
