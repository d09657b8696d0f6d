#include "mixfbm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixfbm/closed_form.hpp"
#include "mixfbm/errors.hpp"
#include "mixfbm/estimator.hpp"
#include "mixfbm/fredholm.hpp"
#include "mixfbm/gaussian_sim.hpp"
#include "mixfbm/kernels.hpp"

namespace mixfbm {

using nlohmann::json;

void ExperimentConfig::validate() const {
  params.validate();
  if (grid_n < 8 || grid_n % 4 != 0) throw DomainError("config: grid_n must be a multiple of 4, >= 8");
  if (path_points < 128) throw DomainError("config: path_points must be >= 128");
  if (replicates < 1) throw DomainError("config: replicates must be >= 1");
  if (t_sequence.empty()) throw DomainError("config: t_sequence is empty");
  for (std::size_t i = 0; i < t_sequence.size(); ++i) {
    if (!(t_sequence[i] > 0.0)) throw DomainError("config: horizons must be positive");
    if (i > 0 && !(t_sequence[i] > t_sequence[i - 1]))
      throw DomainError("config: t_sequence must be strictly increasing");
  }
  if (!(grading >= 1.0) || !(path_grading >= 1.0)) throw DomainError("config: grading exponents must be >= 1");
}

namespace {

json config_json(const ExperimentConfig& c) {
  return json{{"h1", c.params.hurst.h1},       {"h2", c.params.hurst.h2},
              {"sigma", c.params.sigma},        {"theta", c.params.theta},
              {"t_horizon", c.params.horizon_T}, {"grid_n", c.grid_n},
              {"path_points", c.path_points},   {"replicates", c.replicates},
              {"seed", c.master_seed},          {"t_sequence", c.t_sequence},
              {"output_dir", c.output_dir},     {"grading", c.grading},
              {"path_grading", c.path_grading}, {"threads", c.threads}};
}

ExperimentConfig apply_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw DomainError("config: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    try {
      if (key == "h1") c.params.hurst.h1 = v.get<double>();
      else if (key == "h2") c.params.hurst.h2 = v.get<double>();
      else if (key == "sigma") c.params.sigma = v.get<double>();
      else if (key == "theta") c.params.theta = v.get<double>();
      else if (key == "t_horizon") c.params.horizon_T = v.get<double>();
      else if (key == "grid_n") c.grid_n = v.get<int>();
      else if (key == "path_points") c.path_points = v.get<int>();
      else if (key == "replicates") c.replicates = v.get<int>();
      else if (key == "seed") c.master_seed = v.get<std::uint64_t>();
      else if (key == "t_sequence") c.t_sequence = v.get<std::vector<double>>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "grading") c.grading = v.get<double>();
      else if (key == "path_grading") c.path_grading = v.get<double>();
      else if (key == "threads") c.threads = v.get<unsigned>();
      else throw DomainError("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw DomainError("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

double sample_variance(const std::vector<double>& x, double mean) {
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  return apply_json(j, std::move(base));
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) { return config_json(c).dump(2); }

std::vector<double> path_grid(double T, int n, double grading) {
  if (!(T > 0.0) || n < 1 || !(grading >= 1.0)) throw DomainError("path_grid: bad arguments");
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) t[i] = T * std::pow(static_cast<double>(i) / n, grading);
  t[n] = T;
  return t;
}

// ---------------------------------------------------------------------------

double kolmogorov_pvalue(double stat, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * stat;
  if (lam < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_normal(std::vector<double> z) {
  if (z.empty()) throw DomainError("ks_normal: empty sample");
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return {d, kolmogorov_pvalue(d, z.size())};
}

// ---------------------------------------------------------------------------

MCReport run_mc(const ExperimentConfig& config) {
  config.validate();
  const DerivedConstants k = derive_constants(config.params);
  const double T = config.params.horizon_T, theta = config.params.theta;
  AssembleOptions ao;
  ao.threads = config.threads;
  const OperatorPtr op = assemble(KernelContext(k), build_grid(config.grid_n, config.grading), ao);
  const FredholmSolution sol = solve_second_kind(op, T, k);
  const double qv = sol.qv_N, d = k.drift_norm;

  const std::vector<double> times = path_grid(T, config.path_points, config.path_grading);
  const NFunctional nf([&](double t) { return sol.h_T(t); }, times, config.threads);
  const CovarianceModel cm = covariance_model_X(times, k, theta);

  MCReport rep;
  rep.kind = ReportKind::MonteCarlo;
  rep.config = config;
  rep.theta_true = theta;
  rep.horizon_T = T;
  rep.replicates = config.replicates;
  rep.theta_hats.resize(static_cast<std::size_t>(config.replicates));
  const std::size_t batch = 256;
  for (std::size_t first = 0; first < rep.theta_hats.size(); first += batch) {
    const std::size_t count = std::min(batch, rep.theta_hats.size() - first);
    try {
      const Eigen::MatrixXd paths = cm.sample_batch(config.master_seed, first, count, config.threads);
      for (std::size_t c = 0; c < count; ++c) {
        const auto col = paths.col(static_cast<Eigen::Index>(c));
        const double n_full = nf.full(col), n_half = nf.half(col);
        const double th = n_full / (d * qv);
        if (!std::isfinite(th)) throw AccuracyError("non-finite estimate");
        rep.theta_hats[first + c] = th;
        rep.max_refinement_rel = std::max(rep.max_refinement_rel, std::abs(n_full - n_half) / std::sqrt(qv));
      }
    } catch (const std::exception& e) {
      throw AccuracyError("run_mc: replicates " + std::to_string(first) + ".." +
                          std::to_string(first + count - 1) + " (master seed " +
                          std::to_string(config.master_seed) + "): " + e.what());
    }
  }
  double sum = 0.0;
  for (double v : rep.theta_hats) sum += v;
  rep.mean_hat = sum / rep.replicates;
  rep.var_hat = sample_variance(rep.theta_hats, rep.mean_hat);
  rep.se_mean = std::sqrt(rep.var_hat / rep.replicates);
  const EstimatorResult pred = estimate_from(0.0, qv, d, k.sigma * k.sigma * k.gamma2());
  rep.var_pred = pred.variance_pred;
  rep.var_pred_paper = pred.variance_pred_paper;
  std::vector<double> z(rep.theta_hats.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (rep.theta_hats[i] - theta) / std::sqrt(rep.var_pred);
  const KsResult ks = ks_normal(z);
  rep.ks_stat = ks.stat;
  rep.ks_pvalue = ks.pvalue;

  const AsymptoticVariance av = asymptotic_variance(k);
  rep.asymptotic_var_closed_form = av.scaled_limit;
  rep.asymptotic_integral = av.integral;
  rep.slope_expected = -(2.0 - 2.0 * k.hurst.h2);
  HorizonRow row;
  row.T = T;
  row.var_exact = rep.var_pred;
  row.scaled_var = std::pow(T, 2.0 - 2.0 * k.hurst.h2) * rep.var_pred;
  row.qv_N = qv;
  row.lambda = sol.lambda;
  row.residual_sup = sol.residual_sup;
  row.var_paper = rep.var_pred_paper;
  row.integral_mu = h_mu(sol, k).weighted_integral();
  row.gap_h0 = std::abs(row.integral_mu - k.sigma * k.sigma * av.integral) / (k.sigma * k.sigma * av.integral);
  row.var_hat = rep.var_hat;
  rep.per_T.push_back(row);
  return rep;
}

MCReport run_asymptotics(const ExperimentConfig& config) {
  config.validate();
  if (config.t_sequence.size() < 3) throw DomainError("run_asymptotics: need at least 3 horizons");
  const DerivedConstants k = derive_constants(config.params);
  AssembleOptions ao;
  ao.threads = config.threads;
  const OperatorPtr op = assemble(KernelContext(k), build_grid(config.grid_n, config.grading), ao);
  const AsymptoticVariance av = asymptotic_variance(k);
  const double s2 = k.sigma * k.sigma, d = k.drift_norm;

  MCReport rep;
  rep.kind = ReportKind::Asymptotics;
  rep.config = config;
  rep.theta_true = config.params.theta;
  rep.asymptotic_var_closed_form = av.scaled_limit;
  rep.asymptotic_integral = av.integral;
  rep.slope_expected = -(2.0 - 2.0 * k.hurst.h2);
  for (double T : config.t_sequence) {
    HorizonRow row;
    row.T = T;
    try {
      const FredholmSolution sol = solve_second_kind(op, T, k);
      row.qv_N = sol.qv_N;
      row.var_exact = 1.0 / (d * d * sol.qv_N);
      row.scaled_var = std::pow(T, 2.0 - 2.0 * k.hurst.h2) * row.var_exact;
      row.lambda = sol.lambda;
      row.residual_sup = sol.residual_sup;
      row.var_paper = s2 * k.gamma2() / sol.qv_N;
      row.integral_mu = h_mu(sol, k).weighted_integral();
      row.gap_h0 = std::abs(row.integral_mu - s2 * av.integral) / (s2 * av.integral);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rep.per_T.push_back(row);
  }
  // least squares slope of log var against log T
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : rep.per_T) {
    if (!r.ok) continue;
    const double x = std::log(r.T), y = std::log(r.var_exact);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2) rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

json row_json(const HorizonRow& r) {
  return json{{"T", r.T},
              {"var_exact", r.var_exact},
              {"scaled_var", r.scaled_var},
              {"qv_N", r.qv_N},
              {"lambda", r.lambda},
              {"residual_sup", r.residual_sup},
              {"var_paper", r.var_paper},
              {"integral_mu", r.integral_mu},
              {"gap_h0", r.gap_h0},
              {"var_hat", r.var_hat},
              {"ok", r.ok},
              {"error", r.error}};
}

HorizonRow row_from(const json& j) {
  HorizonRow r;
  r.T = j.at("T").get<double>();
  r.var_exact = j.at("var_exact").get<double>();
  r.scaled_var = j.at("scaled_var").get<double>();
  r.qv_N = j.at("qv_N").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.residual_sup = j.at("residual_sup").get<double>();
  r.var_paper = j.at("var_paper").get<double>();
  r.integral_mu = j.at("integral_mu").get<double>();
  r.gap_h0 = j.at("gap_h0").get<double>();
  r.var_hat = j.at("var_hat").get<double>();
  r.ok = j.at("ok").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << body;
  if (!out) throw IoError("write failed for " + p.string());
}

}  // namespace

std::string report_to_json(const MCReport& r) {
  json rows = json::array();
  for (const auto& row : r.per_T) rows.push_back(row_json(row));
  json j{{"kind", r.kind == ReportKind::MonteCarlo ? "mc" : "asymptotics"},
         {"version", MIXFBM_VERSION},
         {"config", config_json(r.config)},
         {"theta_true", r.theta_true},
         {"horizon_T", r.horizon_T},
         {"replicates", r.replicates},
         {"mean_hat", r.mean_hat},
         {"se_mean", r.se_mean},
         {"var_hat", r.var_hat},
         {"var_pred", r.var_pred},
         {"var_pred_paper", r.var_pred_paper},
         {"ks_stat", r.ks_stat},
         {"ks_pvalue", r.ks_pvalue},
         {"max_refinement_rel", r.max_refinement_rel},
         {"theta_hats", r.theta_hats},
         {"per_T", rows},
         {"asymptotic_var_closed_form", r.asymptotic_var_closed_form},
         {"asymptotic_integral", r.asymptotic_integral},
         {"slope", r.slope},
         {"slope_expected", r.slope_expected}};
  return j.dump(2);
}

std::vector<std::string> export_report(const MCReport& r, const std::string& dir, ExportFormat format) {
  if (r.kind == ReportKind::MonteCarlo && r.theta_hats.empty())
    throw DomainError("export_report: no replicates in the report");
  if (r.kind == ReportKind::Asymptotics && r.per_T.empty())
    throw DomainError("export_report: no horizons in the report");
  std::filesystem::path base(dir);
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  if (ec || !std::filesystem::is_directory(base)) throw IoError("cannot create output directory " + dir);
  std::vector<std::string> written;
  if (format != ExportFormat::Json) {
    if (r.kind == ReportKind::MonteCarlo) {
      std::string s = "theta_true,mean_hat,se_mean,var_hat,var_pred,var_pred_paper,ks_stat,ks_pvalue\n";
      s += fmt(r.theta_true) + "," + fmt(r.mean_hat) + "," + fmt(r.se_mean) + "," + fmt(r.var_hat) + "," +
           fmt(r.var_pred) + "," + fmt(r.var_pred_paper) + "," + fmt(r.ks_stat) + "," + fmt(r.ks_pvalue) + "\n";
      write_file(base / "mc_summary.csv", s);
      written.push_back((base / "mc_summary.csv").string());
    }
    std::string s = "T,var_exact,scaled_var,qv_N,lambda,residual_sup\n";
    for (const auto& row : r.per_T) {
      if (!row.ok) continue;
      s += fmt(row.T) + "," + fmt(row.var_exact) + "," + fmt(row.scaled_var) + "," + fmt(row.qv_N) + "," +
           fmt(row.lambda) + "," + fmt(row.residual_sup) + "\n";
    }
    write_file(base / "asymptotics.csv", s);
    written.push_back((base / "asymptotics.csv").string());
  }
  if (format != ExportFormat::Csv) {
    write_file(base / "report.json", report_to_json(r) + "\n");
    written.push_back((base / "report.json").string());
  }
  return written;
}

MCReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
    MCReport r;
    r.kind = j.at("kind").get<std::string>() == "mc" ? ReportKind::MonteCarlo : ReportKind::Asymptotics;
    r.config = apply_json(j.at("config"), ExperimentConfig{});
    r.theta_true = j.at("theta_true").get<double>();
    r.horizon_T = j.at("horizon_T").get<double>();
    r.replicates = j.at("replicates").get<int>();
    r.mean_hat = j.at("mean_hat").get<double>();
    r.se_mean = j.at("se_mean").get<double>();
    r.var_hat = j.at("var_hat").get<double>();
    r.var_pred = j.at("var_pred").get<double>();
    r.var_pred_paper = j.at("var_pred_paper").get<double>();
    r.ks_stat = j.at("ks_stat").get<double>();
    r.ks_pvalue = j.at("ks_pvalue").get<double>();
    r.max_refinement_rel = j.at("max_refinement_rel").get<double>();
    r.theta_hats = j.at("theta_hats").get<std::vector<double>>();
    for (const auto& row : j.at("per_T")) r.per_T.push_back(row_from(row));
    r.asymptotic_var_closed_form = j.at("asymptotic_var_closed_form").get<double>();
    r.asymptotic_integral = j.at("asymptotic_integral").get<double>();
    r.slope = j.at("slope").get<double>();
    r.slope_expected = j.at("slope_expected").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw IoError("malformed report " + path + ": " + e.what());
  }
}

}  // namespace mixfbm
