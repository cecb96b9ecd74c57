#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include "ivqr/error.hpp"

namespace ivqr::cli {

using nlohmann::json;

json ToJson(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json ToJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(ToJson(Vector(m.row(r).transpose())));
  return rows;
}

json ToJson(const GmmFit& fit, const std::vector<std::string>& names) {
  json j;
  j["coefficients"] = names;
  j["theta_hat"] = ToJson(fit.theta_hat);
  j["objective"] = fit.objective;
  j["lower_bound"] = fit.lower_bound;
  j["gap"] = fit.gap;
  j["status"] = ToString(fit.status);
  j["nodes"] = fit.nodes;
  j["solve_seconds"] = fit.solve_seconds;
  j["ties"] = fit.ties;
  j["sign_vector"] = SignString(fit.e_hat);
  j["box"] = {{"lo", ToJson(fit.box.lo)}, {"hi", ToJson(fit.box.hi)}};
  j["tsls"] = {{"theta", ToJson(fit.tsls.theta)},
               {"robust_se", ToJson(fit.tsls.robust_se)},
               {"degenerate_variance", fit.tsls.degenerate_variance}};
  j["weight_matrix"] = ToJson(fit.q_hat);
  if (fit.theta_interval) {
    j["theta_interval"] = {fit.theta_interval->first, fit.theta_interval->second};
  }
  return j;
}

json ToJson(const InferenceReport& rep, const std::vector<std::string>& names) {
  json j;
  j["coefficients"] = names;
  j["se"] = ToJson(rep.se);
  json ci = json::array();
  for (const auto& [lo, hi] : rep.ci) ci.push_back({lo, hi});
  j["ci"] = ci;
  j["alpha"] = rep.alpha;
  j["bandwidth"] = rep.bandwidth;
  j["omega"] = ToJson(rep.omega);
  j["sigma_wl"] = ToJson(rep.sigma_wl);
  j["sigma_ll"] = ToJson(rep.sigma_ll);
  return j;
}

json ToJson(const sim::McSummary& s) {
  json j;
  j["n"] = s.cfg.n;
  j["base_seed"] = s.cfg.seed;
  j["reps"] = s.opts.reps;
  j["failures"] = s.failures;
  j["attempts"] = s.attempts;
  j["bandwidth_multipliers"] = s.opts.bandwidth_multipliers;
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"tau", r.tau},
                    {"coefficient", "theta" + std::to_string(r.coefficient)},
                    {"truth", r.truth},
                    {"mean_bias", r.mean_bias},
                    {"median_bias", r.median_bias},
                    {"rmse", r.rmse},
                    {"mae", r.mae},
                    {"sd", r.sd},
                    {"mean_se", r.mean_se},
                    {"population_se", r.population_se},
                    {"coverage", r.coverage},
                    {"used", r.used}});
  }
  j["rows"] = rows;
  json timing = json::array();
  for (const auto& t : s.timing) {
    timing.push_back({{"tau", t.tau},
                      {"mean", t.mean},
                      {"min", t.min},
                      {"median", t.median},
                      {"max", t.max},
                      {"mean_nodes", t.mean_nodes},
                      {"not_optimal", t.not_optimal}});
  }
  j["timing_seconds"] = timing;
  j["objectives"] = s.objectives;
  return j;
}

std::string InferenceTable(const Vector& theta, const InferenceReport& rep,
                           const std::vector<std::string>& names) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  const int level = static_cast<int>(std::lround(100.0 * (1.0 - rep.alpha)));
  out << "| coefficient | estimate | std. error | " << level << "% CI |\n";
  out << "|---|---|---|---|\n";
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out << "| " << (k < names.size() ? names[k] : "theta" + std::to_string(j)) << " | "
        << theta(j) << " | " << rep.se(j) << " | (" << rep.ci[k].first << ", "
        << rep.ci[k].second << ") |\n";
  }
  return out.str();
}

void WriteAtomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename onto '" + path + "'");
  }
}

}  // namespace ivqr::cli
