#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "csv.hpp"
#include "mixfbm/closed_form.hpp"
#include "mixfbm/errors.hpp"
#include "mixfbm/estimator.hpp"
#include "mixfbm/fredholm.hpp"
#include "mixfbm/gaussian_sim.hpp"
#include "mixfbm/harness.hpp"
#include "mixfbm/kernels.hpp"
#include "mixfbm/model.hpp"

using namespace mixfbm;
using nlohmann::json;

namespace {

struct Globals {
  double h1 = 0.6, h2 = 0.9, sigma = 1.0, theta = 0.0, T = 1.0;
  int grid_n = 256, path_points = 512, replicates = 1000;
  std::uint64_t seed = 20240601;
  std::string config, out;
  CLI::App* app = nullptr;

  bool given(const char* name) const { return app->get_option(name)->count() > 0; }

  ExperimentConfig experiment() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    if (given("--h1")) c.params.hurst.h1 = h1;
    if (given("--h2")) c.params.hurst.h2 = h2;
    if (given("--sigma")) c.params.sigma = sigma;
    if (given("--theta")) c.params.theta = theta;
    if (given("--t-horizon")) c.params.horizon_T = T;
    if (given("--grid-n")) c.grid_n = grid_n;
    if (given("--path-points")) c.path_points = path_points;
    if (given("--replicates")) c.replicates = replicates;
    if (given("--seed")) c.master_seed = seed;
    if (given("--out")) c.output_dir = out;
    c.validate();
    return c;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_constants(const Globals& g) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  const double T = c.params.horizon_T;
  print_json({{"h1", k.hurst.h1},
              {"h2", k.hurst.h2},
              {"sigma", k.sigma},
              {"alpha_h1", k.alpha_h1},
              {"alpha_h2", k.alpha_h2},
              {"beta_h1", k.beta_h1},
              {"beta_h2", k.beta_h2},
              {"gamma_h1", k.gamma_h1},
              {"gamma_h1_printed", k.gamma_h1_printed},
              {"epsilon_h1", k.epsilon_h1},
              {"script_b", k.script_b},
              {"delta_paper", k.delta_paper},
              {"drift_norm", k.drift_norm},
              {"T", T},
              {"mu", k.mu_of_T(T)},
              {"lambda", k.lambda_of_T(T)},
              {"solver_admissible", k.hurst.solver_admissible()}});
  return 0;
}

int cmd_kernel(const Globals& g, const std::string& which, double t, double s) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  const KernelContext ctx(k);
  double v = 0.0;
  if (which == "K12") v = kernel_K12(ctx, t, s);
  else if (which == "dK12") v = kernel_K12_dt(ctx, t, s);
  else if (which == "k") v = kernel_k(ctx, t, s);
  else if (which == "k1") v = kernel_k1(ctx, t, s);
  else if (which == "R") v = covariance_X2(ctx, t, s);
  else if (which == "cov") v = covariance_X(t, s, k);
  else throw DomainError("kernel: unknown kernel '" + which + "'");
  print_json({{"kernel", which}, {"t", t}, {"s", s}, {"value", v}});
  return 0;
}

int cmd_solve(const Globals& g, int n_out, double grading, bool strict) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  const double T = c.params.horizon_T;
  const OperatorPtr op = assemble(KernelContext(k), build_grid(c.grid_n, grading));
  SolverOptions so;
  so.strict = strict;
  const FredholmSolution sol = solve_second_kind(op, T, k, so);
  json j{{"T", T},
         {"grid_n", c.grid_n},
         {"lambda", sol.lambda},
         {"qv_N", sol.qv_N},
         {"residual_sup", sol.residual_sup},
         {"residual_on_grid", sol.residual_on_grid},
         {"condition", sol.condition},
         {"eigen_margin", sol.eigen_margin},
         {"flagged", sol.flagged},
         {"integral_h_mu", h_mu(sol, k).weighted_integral()}};
  if (!g.out.empty()) {
    std::vector<double> ts, hs;
    for (int i = 1; i <= n_out; ++i) {
      const double t = T * std::pow(static_cast<double>(i) / n_out, 2.0);
      ts.push_back(i == n_out ? T : t);
      hs.push_back(sol.h_T(ts.back()));
    }
    cli::write_table(g.out, {"t", "h_T"}, {ts, hs},
                     {{"T", T}, {"qv_N", sol.qv_N}, {"h1", k.hurst.h1}, {"h2", k.hurst.h2},
                      {"sigma", k.sigma}, {"drift_norm", k.drift_norm},
                      {"sigma2_gamma2", k.sigma * k.sigma * k.gamma2()}});
    j["h_file"] = g.out;
  }
  print_json(j);
  return sol.flagged ? 3 : 0;
}

int cmd_closed_form(const Globals& g, int n_out, bool want_av, bool verify, bool printed) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  const ChainVariant var = printed ? ChainVariant::Printed : ChainVariant::Corrected;
  const double C = printed ? k.gamma2() : natural_c(k);
  json j{{"C", C}, {"variant", printed ? "printed" : "corrected"}};
  const ConstantChain ch = constant_chain(C, k, var);
  j["chain"] = {ch.c1, ch.c2, ch.c3, ch.c4, ch.c5, ch.c6};
  if (!g.out.empty()) {
    auto tab = H0Table::get(k.hurst, var);
    std::vector<double> vs, hs;
    for (int i = 1; i < n_out; ++i) {
      vs.push_back(static_cast<double>(i) / n_out);
      hs.push_back((*tab)(vs.back(), C));
    }
    cli::write_table(g.out, {"v", "h0"}, {vs, hs});
    j["h0_file"] = g.out;
  }
  if (want_av) {
    const AsymptoticVariance av = asymptotic_variance(k);
    j["asymptotic_variance"] = {{"integral_h0", av.integral},
                                {"paper_form", av.paper_form},
                                {"scaled_limit", av.scaled_limit},
                                {"error_estimate", av.error_estimate}};
  }
  if (verify) {
    FirstKindOptions fo;
    fo.variant = var;
    fo.C = C;
    const FirstKindReport r = verify_first_kind(k, build_grid(c.grid_n), fo);
    j["first_kind"] = {{"max_rel_deviation", r.max_rel_deviation},
                       {"constancy", r.constancy},
                       {"mean_ratio", r.mean_ratio},
                       {"points", r.u.size()}};
  }
  print_json(j);
  return 0;
}

int cmd_simulate(const Globals& g, const std::string& which, int n_points, double hurst) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  const double T = c.params.horizon_T, theta = c.params.theta;
  const std::vector<double> times = uniform_grid(T, n_points);
  SamplePath p;
  if (which == "X") p = simulate_X(times, c.master_seed, k);
  else if (which == "Y") p = simulate_Y(times, c.master_seed, theta, k);
  else if (which == "Z") p = simulate_Z(times, c.master_seed, theta, k);
  else if (which == "fbm") p = simulate_fbm(hurst > 0.0 ? hurst : k.hurst.h1, times, c.master_seed);
  else throw DomainError("simulate: --which must be one of X, Y, Z, fbm");
  if (g.out.empty()) throw DomainError("simulate: --out is required");
  cli::write_table(g.out, {"time", "value"}, {p.times, p.values});
  print_json({{"which", which}, {"points", p.size()}, {"seed", c.master_seed}, {"out", g.out}});
  return 0;
}

SamplePath read_path(const std::string& file, PathLabel label) {
  const cli::Table t = cli::read_table(file);
  if (t.cols.size() < 2) throw IoError(file + ": expected columns time,value");
  SamplePath p;
  p.times = t.cols[0];
  p.values = t.cols[1];
  p.label = label;
  p.validate();
  return p;
}

int cmd_transform(const Globals& g, const std::string& direction, const std::string& in) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  if (g.out.empty()) throw DomainError("transform: --out is required");
  SamplePath r;
  if (direction == "forward") r = molchan_transform(read_path(in, PathLabel::Z), k);
  else if (direction == "inverse") r = inverse_transform(read_path(in, PathLabel::Y), k);
  else throw DomainError("transform: --direction must be forward or inverse");
  cli::write_table(g.out, {"time", "value"}, {r.times, r.values});
  print_json({{"direction", direction}, {"points", r.size()}, {"out", g.out}});
  return 0;
}

int cmd_estimate(const Globals& g, const std::string& h_file, const std::string& path_file) {
  const ExperimentConfig c = g.experiment();
  const DerivedConstants k = derive_constants(c.params);
  const SamplePath x = read_path(path_file, PathLabel::Y);
  const double T = x.times.back();
  EstimatorResult r;
  if (h_file.empty()) {
    const OperatorPtr op = assemble(KernelContext(k), build_grid(c.grid_n));
    r = mle(solve_second_kind(op, T, k), x, k);
  } else {
    const cli::Table h = cli::read_table(h_file);
    for (const char* key : {"T", "qv_N", "drift_norm", "sigma2_gamma2"})
      if (!h.meta.count(key)) throw IoError(h_file + ": missing metadata '" + key + "'");
    if (std::abs(h.meta.at("T") - T) > 1e-12 * T)
      throw DomainError("estimate: path horizon does not match the h file");
    const auto& ts = h.cols.at(0);
    const auto& hs = h.cols.at(1);
    auto interp = [&](double t) {
      if (t <= ts.front()) return hs.front();
      const auto it = std::lower_bound(ts.begin(), ts.end(), t);
      if (it == ts.end()) return hs.back();
      const std::size_t i = static_cast<std::size_t>(it - ts.begin());
      const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
      return (1.0 - w) * hs[i - 1] + w * hs[i];
    };
    const double qv = h.meta.at("qv_N");
    const NIntegral n = stochastic_integral_N(interp, x, qv);
    r = estimate_from(n.value, qv, h.meta.at("drift_norm"), h.meta.at("sigma2_gamma2"));
    r.n_detail = n;
  }
  json j{{"theta_hat", r.theta_hat},
         {"n_T", r.n_T},
         {"qv_N", r.qv_N},
         {"variance_pred", r.variance_pred},
         {"variance_pred_paper", r.variance_pred_paper},
         {"refinement_diff", r.n_detail.refinement_diff},
         {"coarse_warning", r.n_detail.coarse_warning}};
  print_json(j);
  if (!g.out.empty()) {
    std::ofstream out(g.out);
    if (!out) throw IoError("cannot write " + g.out);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_mc(const Globals& g) {
  const ExperimentConfig c = g.experiment();
  const MCReport r = run_mc(c);
  const auto files = export_report(r, c.output_dir);
  print_json({{"theta_true", r.theta_true},
              {"mean_hat", r.mean_hat},
              {"se_mean", r.se_mean},
              {"var_hat", r.var_hat},
              {"var_pred", r.var_pred},
              {"var_pred_paper", r.var_pred_paper},
              {"ks_stat", r.ks_stat},
              {"ks_pvalue", r.ks_pvalue},
              {"files", files}});
  return 0;
}

int cmd_asymptotics(const Globals& g) {
  const ExperimentConfig c = g.experiment();
  const MCReport r = run_asymptotics(c);
  const auto files = export_report(r, c.output_dir);
  json rows = json::array();
  for (const auto& row : r.per_T)
    rows.push_back({{"T", row.T}, {"var_exact", row.var_exact}, {"scaled_var", row.scaled_var},
                    {"gap_h0", row.gap_h0}, {"ok", row.ok}, {"error", row.error}});
  print_json({{"slope", r.slope},
              {"slope_expected", r.slope_expected},
              {"asymptotic_var_closed_form", r.asymptotic_var_closed_form},
              {"per_T", rows},
              {"files", files}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift estimation in the mixed fractional Brownian model"};
  app.set_version_flag("--version", std::string(MIXFBM_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.app = &app;
  app.add_option("--h1", g.h1, "Hurst index of the sigma-scaled component");
  app.add_option("--h2", g.h2, "Hurst index of the second component");
  app.add_option("--sigma", g.sigma, "Scale of the first component");
  app.add_option("--theta", g.theta, "Drift parameter");
  app.add_option("--t-horizon", g.T, "Observation horizon T");
  app.add_option("--grid-n", g.grid_n, "Collocation nodes (multiple of 4)");
  app.add_option("--path-points", g.path_points, "Points on simulated paths");
  app.add_option("--replicates", g.replicates, "Monte Carlo replicates");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--config", g.config, "JSON config file; flags override it");
  app.add_option("--out", g.out, "Output file or directory");

  int rc = 0;
  app.add_subcommand("constants", "Derived constants")->callback([&] { rc = cmd_constants(g); });

  std::string kwhich = "K12";
  double kt = 1.0, ks = 0.4;
  auto* kern = app.add_subcommand("kernel", "Evaluate one kernel value");
  kern->add_option("--which", kwhich, "K12, dK12, k, k1, R or cov")->check(CLI::IsMember({"K12", "dK12", "k", "k1", "R", "cov"}));
  kern->add_option("--t", kt, "first argument");
  kern->add_option("--s", ks, "second argument");
  kern->callback([&] { rc = cmd_kernel(g, kwhich, kt, ks); });

  int solve_points = 2048;
  double grading = 3.0;
  bool strict = false;
  auto* solve = app.add_subcommand("solve", "Solve the second-kind equation; --out writes t,h_T");
  solve->add_option("--n-points", solve_points, "samples of h_T in the output file");
  solve->add_option("--grading", grading, "grid grading exponent");
  solve->add_flag("--strict", strict, "fail instead of flagging a large residual");
  solve->callback([&] { rc = cmd_solve(g, solve_points, grading, strict); });

  int h0_points = 1000;
  bool want_av = false, verify = false, printed = false;
  auto* cf = app.add_subcommand("closed-form", "First-kind solution h0; --out writes v,h0");
  cf->add_option("--n-points", h0_points, "number of intervals for the h0 table");
  cf->add_flag("--asymptotic-variance", want_av, "print the limit functional");
  cf->add_flag("--verify", verify, "check K h0 against the right-hand side");
  cf->add_flag("--printed", printed, "use the chain as printed instead of the corrected one");
  cf->callback([&] { rc = cmd_closed_form(g, h0_points, want_av, verify, printed); });

  std::string swhich = "Y";
  int s_points = 512;
  double s_hurst = 0.0;
  auto* sim = app.add_subcommand("simulate", "Exact Gaussian path on a uniform grid");
  sim->add_option("--which", swhich, "X, Y, Z or fbm")->check(CLI::IsMember({"X", "Y", "Z", "fbm"}));
  sim->add_option("--n-points", s_points, "points after the origin");
  sim->add_option("--hurst", s_hurst, "Hurst index for --which fbm (default h1)");
  sim->callback([&] { rc = cmd_simulate(g, swhich, s_points, s_hurst); });

  std::string direction = "forward", tin;
  auto* tr = app.add_subcommand("transform", "Z -> Y (forward) or Y -> Z (inverse)");
  tr->add_option("--direction", direction, "forward or inverse")->check(CLI::IsMember({"forward", "inverse"}));
  tr->add_option("--in", tin, "input path CSV (time,value)")->required();
  tr->callback([&] { rc = cmd_transform(g, direction, tin); });

  std::string h_file, path_file;
  auto* est = app.add_subcommand("estimate", "MLE from a path (and optionally a saved h_T)");
  est->add_option("--h-file", h_file, "output of `solve --out`; solved afresh if omitted");
  est->add_option("--path-file", path_file, "observed path CSV (time,value)")->required();
  est->callback([&] { rc = cmd_estimate(g, h_file, path_file); });

  app.add_subcommand("mc", "Monte Carlo study at --t-horizon; --out is a directory")
      ->callback([&] { rc = cmd_mc(g); });
  app.add_subcommand("asymptotics", "Exact variances over the horizon sequence")
      ->callback([&] { rc = cmd_asymptotics(g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const AccuracyError& e) {
    std::cerr << "accuracy failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
