// ivqr: exact IVQR GMM estimation, Monte Carlo and oracle cross-checks.
//
// Exit codes:
//   0  success (a solver time limit is reported in the output, not an error)
//   1  unexpected internal error
//   2  I/O failure
//   3  invalid input: flags, schema, dataset contents, or a request too large
//   4  numerical degeneracy, or more than 10% of simulation repetitions failed
//   5  oracle disagreement

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ivqr/error.hpp"
#include "ivqr/gmm.hpp"
#include "ivqr/inference.hpp"
#include "ivqr/simulation.hpp"
#include "ivqr/version.hpp"
#include "report.hpp"

namespace {

using nlohmann::json;
using namespace ivqr;

enum Exit { kOk = 0, kInternal = 1, kIoExit = 2, kInput = 3, kNumeric = 4, kDisagree = 5 };

int ExitFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
      return kIoExit;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kNonNumericCell:
    case ErrorCode::kEmptyFile:
    case ErrorCode::kInconsistentDimensions:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kTooLarge:
      return kInput;
    case ErrorCode::kNotPositiveDefinite:
    case ErrorCode::kRankDeficient:
    case ErrorCode::kSingularInstruments:
    case ErrorCode::kDegenerateVariance:
    case ErrorCode::kDegenerateDesign:
    case ErrorCode::kNoFeasibleSolution:
      return kNumeric;
  }
  return kInternal;
}

struct Common {
  std::vector<double> taus{0.25, 0.5, 0.75};
  double epsilon = 1e-6;
  double box_scale = 10.0;
  double bandwidth_mult = 1.0;
  double alpha = 0.05;
  std::string kernel = "gaussian";
  double time_limit = 0.0;
  std::int64_t node_limit = 0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  int threads = 0;
  std::string format = "markdown";
  std::string output;
};

struct FitArgs {
  std::string data;
  std::string schema;
  std::string node_log;
};

struct SimArgs {
  Eigen::Index n = 100;
  int reps = 100;
  std::uint64_t seed = 42;
  std::vector<double> multipliers{0.8, 1.0, 1.2};
  bool no_population_se = false;
  bool progress = false;
};

struct OracleArgs {
  int instances = 200;
  Eigen::Index n = 10;
  int p = 2;
  int q = 0;
  std::uint64_t seed = 1;
  bool halve_big_m = false;
  std::string log = "oracle_discrepancies.json";
  std::string data;
  std::string schema;
};

int ResolveThreads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("IVQR_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::kInvalidArgument,
                std::string("IVQR_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

Kernel ParseKernel(const std::string& k) {
  if (k == "gaussian") return Kernel::kGaussian;
  if (k == "epanechnikov") return Kernel::kEpanechnikov;
  throw Error(ErrorCode::kInvalidArgument, "unknown kernel '" + k + "'");
}

void ValidateCommon(const Common& c) {
  if (c.taus.empty()) throw Error(ErrorCode::kInvalidArgument, "--taus is empty");
  for (double t : c.taus) Validate(QuantileSpec{t, c.epsilon, c.box_scale});
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  if (!(c.bandwidth_mult > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth multiplier must be positive");
  }
  if (c.time_limit < 0.0 || c.node_limit < 0 || c.abs_gap < 0.0 || c.rel_gap < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "limits and gaps must be non-negative");
  }
  ParseKernel(c.kernel);
}

BnbOptions MakeBnb(const Common& c, int threads) {
  BnbOptions o;
  o.abs_gap = c.abs_gap;
  o.rel_gap = c.rel_gap;
  o.time_limit_seconds = c.time_limit;
  o.node_limit = c.node_limit;
  o.threads = threads;
  return o;
}

json CommonJson(const Common& c, int threads) {
  return {{"taus", c.taus},
          {"epsilon", c.epsilon},
          {"box_scale", c.box_scale},
          {"bandwidth_mult", c.bandwidth_mult},
          {"alpha", c.alpha},
          {"kernel", c.kernel},
          {"time_limit", c.time_limit},
          {"node_limit", c.node_limit},
          {"abs_gap", c.abs_gap},
          {"rel_gap", c.rel_gap},
          {"threads", threads},
          {"format", c.format},
          {"output", c.output}};
}

json Header(const std::string& command, const json& config) {
  return {{"tool", "ivqr"},
          {"version", kVersion},
          {"report_schema", cli::kReportSchemaVersion},
          {"command", command},
          {"config", config}};
}

std::string MarkdownHeader(const std::string& title, const json& header) {
  std::ostringstream out;
  out << "# " << title << "\n\n";
  out << "ivqr " << kVersion << "\n\n";
  out << "```json\n" << header["config"].dump(2) << "\n```\n\n";
  return out.str();
}

// Writes the primary report and, for csv/markdown files, a JSON sidecar.
void Emit(const Common& c, const std::string& body, const json& sidecar) {
  if (c.output.empty()) {
    std::cout << body;
    std::cout.flush();
    return;
  }
  if (c.format != "json") cli::WriteAtomically(c.output + ".json", sidecar.dump(2) + "\n");
  cli::WriteAtomically(c.output, body);
}

std::string Num(double v, int prec = 10) {
  std::ostringstream o;
  o << std::setprecision(prec) << v;
  return o.str();
}

// ---------------------------------------------------------------- fit

int RunFit(const Common& c, const FitArgs& a) {
  ValidateCommon(c);
  const int threads = ResolveThreads(c.threads);
  const CsvSchema schema = LoadSchema(a.schema);
  const Dataset ds = LoadCsv(a.data, schema);
  const InstrumentSet inst = SchemaInstruments(ds, schema);
  const auto names = ds.WNames();

  json config = CommonJson(c, threads);
  config["data"] = a.data;
  config["schema"] = a.schema;
  config["node_log"] = a.node_log;
  json report = Header("fit", config);
  report["n"] = ds.n();
  report["instruments"] = inst.names;

  std::ofstream node_log;
  if (!a.node_log.empty()) {
    node_log.open(a.node_log);
    if (!node_log) throw Error(ErrorCode::kIo, "cannot open node log '" + a.node_log + "'");
  }

  std::ostringstream md, csv;
  csv << "# ivqr " << kVersion << "\n# config " << config.dump() << "\n";
  csv << "tau,coefficient,estimate,se,ci_lo,ci_hi,objective,gap,status\n";
  md << MarkdownHeader("IVQR GMM estimates", report);
  md << "n = " << ds.n() << ", instruments: ";
  for (std::size_t k = 0; k < inst.names.size(); ++k) md << (k ? ", " : "") << inst.names[k];
  md << "\n\n";

  InferenceOptions io;
  io.alpha = c.alpha;
  io.bandwidth_multiplier = c.bandwidth_mult;
  io.kernel = ParseKernel(c.kernel);

  json results = json::array();
  for (double tau : c.taus) {
    const QuantileSpec qs{tau, c.epsilon, c.box_scale};
    GmmSpec gs;
    gs.tau = tau;
    BnbOptions bo = MakeBnb(c, threads);
    if (node_log.is_open()) {
      node_log << "{\"tau\":" << tau << "}\n";
      bo.node_log = &node_log;
    }
    const GmmFit fit = FitIvqrGmm(ds, inst, gs, qs, bo);
    const InferenceReport inf = Infer(ds, inst, fit.theta_hat, tau, io);
    results.push_back({{"tau", tau},
                       {"fit", cli::ToJson(fit, names)},
                       {"inference", cli::ToJson(inf, names)}});

    md << "## tau = " << Num(tau, 4) << "\n\n";
    md << "status " << ToString(fit.status) << ", objective " << Num(fit.objective)
       << ", gap " << Num(fit.gap, 3) << ", nodes " << fit.nodes << ", "
       << std::fixed << std::setprecision(2) << fit.solve_seconds << " s, bandwidth "
       << std::setprecision(4) << inf.bandwidth << std::defaultfloat << "\n\n";
    md << cli::InferenceTable(fit.theta_hat, inf, names) << "\n";
    for (Eigen::Index j = 0; j < fit.theta_hat.size(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      csv << Num(tau) << ',' << names[k] << ',' << Num(fit.theta_hat(j), 17) << ','
          << Num(inf.se(j), 17) << ',' << Num(inf.ci[k].first, 17) << ','
          << Num(inf.ci[k].second, 17) << ',' << Num(fit.objective, 17) << ','
          << Num(fit.gap, 17) << ',' << ToString(fit.status) << '\n';
    }
  }
  report["results"] = results;

  if (c.format == "json") {
    Emit(c, report.dump(2) + "\n", report);
  } else if (c.format == "csv") {
    Emit(c, csv.str(), report);
  } else {
    Emit(c, md.str(), report);
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

int RunSimulate(const Common& c, const SimArgs& a) {
  ValidateCommon(c);
  const int threads = ResolveThreads(c.threads);
  if (a.reps < 1) throw Error(ErrorCode::kInvalidArgument, "--reps must be at least 1");
  if (a.multipliers.empty()) throw Error(ErrorCode::kInvalidArgument, "--bandwidth-mults is empty");
  sim::DgpConfig cfg;
  cfg.n = a.n;
  cfg.seed = a.seed;
  sim::Validate(cfg);

  sim::McOptions o;
  o.taus = c.taus;
  o.reps = a.reps;
  // --bandwidth-mult rescales the whole sweep.
  o.bandwidth_multipliers.clear();
  for (double m : a.multipliers) o.bandwidth_multipliers.push_back(m * c.bandwidth_mult);
  o.alpha = c.alpha;
  o.epsilon = c.epsilon;
  o.box_scale = c.box_scale;
  o.kernel = ParseKernel(c.kernel);
  o.bnb = MakeBnb(c, 1);
  o.threads = threads;
  o.population_se = !a.no_population_se;
  if (a.progress) {
    o.progress = [](int done, int total) {
      std::cerr << "\rrepetition " << done << "/" << total << std::flush;
      if (done == total) std::cerr << "\n";
    };
  }

  json config = CommonJson(c, threads);
  config["n"] = a.n;
  config["reps"] = a.reps;
  config["seed"] = a.seed;
  config["bandwidth_mults"] = a.multipliers;
  config["population_se"] = o.population_se;

  const sim::McSummary s = sim::RunMonteCarlo(cfg, o);
  json report = Header("simulate", config);
  report["summary"] = cli::ToJson(s);

  // Thread count and output path do not affect the numbers; leaving them out
  // keeps the CSV byte-identical across --threads settings.
  json det = config;
  det.erase("threads");
  det.erase("output");
  det.erase("format");
  std::string body;
  if (c.format == "json") {
    body = report.dump(2) + "\n";
  } else if (c.format == "csv") {
    body = "# ivqr " + std::string(kVersion) + "\n# config " + det.dump() + "\n" +
           sim::SummaryCsv(s);
  } else {
    body = MarkdownHeader("IVQR GMM Monte Carlo", report) + sim::SummaryMarkdown(s);
  }
  Emit(c, body, report);

  if (s.failures * 10 > s.attempts) {
    std::cerr << "ivqr: " << s.failures << " of " << s.attempts
              << " repetition solves failed (more than 10%)\n";
    return kNumeric;
  }
  return kOk;
}

// ---------------------------------------------------------------- oracle

json InstanceJson(const MiqpProblem& prob, const BigM& used) {
  return {{"y", cli::ToJson(prob.y)},
          {"w", cli::ToJson(prob.w)},
          {"l", cli::ToJson(prob.g)},
          {"tau", prob.tau},
          {"epsilon", prob.epsilon},
          {"box", {{"lo", cli::ToJson(prob.box.lo)}, {"hi", cli::ToJson(prob.box.hi)}}},
          {"big_m", cli::ToJson(prob.big_m.m)},
          {"big_m_used", cli::ToJson(used.m)}};
}

int RunOracle(const Common& c, const OracleArgs& a) {
  ValidateCommon(c);
  const int threads = ResolveThreads(c.threads);
  const bool from_file = !a.data.empty();
  if (!from_file) {
    if (a.n > kOracleMaxN) {
      throw Error(ErrorCode::kTooLarge, "oracle enumeration limited to n <= " +
                                            std::to_string(kOracleMaxN) + ", requested n = " +
                                            std::to_string(a.n));
    }
    if (a.instances < 1) throw Error(ErrorCode::kInvalidArgument, "--instances must be >= 1");
  }
  const int q = a.q > 0 ? a.q : std::min(3, a.p + 1);

  std::vector<std::pair<Dataset, InstrumentSet>> data;
  if (from_file) {
    const CsvSchema schema = LoadSchema(a.schema);
    Dataset ds = LoadCsv(a.data, schema);
    if (ds.n() > kOracleMaxN) {
      throw Error(ErrorCode::kTooLarge, "oracle enumeration limited to n <= " +
                                            std::to_string(kOracleMaxN) + ", dataset has n = " +
                                            std::to_string(ds.n()));
    }
    InstrumentSet inst = SchemaInstruments(ds, schema);
    data.emplace_back(std::move(ds), std::move(inst));
  } else {
    for (int k = 0; k < a.instances; ++k) {
      auto si = sim::RandomSmallInstance(a.n, a.p, q, a.seed + static_cast<std::uint64_t>(k));
      data.emplace_back(std::move(si.ds), std::move(si.inst));
    }
  }

  json config = CommonJson(c, threads);
  config["instances"] = from_file ? 1 : a.instances;
  config["n"] = from_file ? data.front().first.n() : a.n;
  config["p"] = from_file ? data.front().first.p() : a.p;
  config["q"] = from_file ? data.front().second.q() : q;
  config["seed"] = a.seed;
  config["inject_halved_big_m"] = a.halve_big_m;
  config["log"] = a.log;
  config["data"] = a.data;
  config["schema"] = a.schema;

  constexpr double kAgreeTol = 1e-8;
  constexpr double kFeasTol = 1e-9;
  json discrepancies = json::array();
  int checked = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& [ds, inst] = data[k];
    const double tau = c.taus[k % c.taus.size()];
    const QuantileSpec qs{tau, c.epsilon, c.box_scale};
    const ParameterBox box = BuildParameterBox(FitTsls(ds, inst), c.box_scale);
    const Matrix qhat = WeightMatrix(inst, tau);
    const MiqpProblem exact = BuildProblem(ds, inst, qs, box, qhat);
    BigM used = exact.big_m;
    if (a.halve_big_m) used.m *= 0.5;
    const MiqpProblem solved =
        BuildProblem(ds.y, ds.W(), inst.l, qs, box, qhat, used);

    const OracleResult orc = OracleEnumerate(exact, a.seed + k);
    json entry;
    std::string problem;
    try {
      const BnbResult r = BranchAndBound(solved, MakeBnb(c, threads));
      const double diff = std::abs(r.objective - orc.objective);
      const double viol = exact.Violation(r.e_hat, r.theta_hat);
      worst = std::max(worst, diff);
      if (r.status != BnbStatus::kProvedOptimal) problem = "not proved optimal";
      else if (diff > kAgreeTol) problem = "objective mismatch";
      else if (viol > kFeasTol) problem = "returned point violates the sign constraints";
      entry = {{"bnb_objective", r.objective},
               {"bnb_sign_vector", SignString(r.e_hat)},
               {"bnb_theta", cli::ToJson(r.theta_hat)},
               {"bnb_status", ToString(r.status)},
               {"violation", viol}};
    } catch (const Error& e) {
      problem = e.what();
    }
    ++checked;
    if (!problem.empty()) {
      entry["index"] = k;
      entry["problem"] = problem;
      entry["oracle_objective"] = orc.objective;
      entry["oracle_sign_vector"] = SignString(orc.e);
      entry["instance"] = InstanceJson(exact, used);
      discrepancies.push_back(entry);
    }
  }

  json report = Header("oracle", config);
  report["checked"] = checked;
  report["disagreements"] = discrepancies.size();
  report["max_abs_difference"] = worst;

  if (!discrepancies.empty()) {
    json log = Header("oracle", config);
    log["discrepancies"] = discrepancies;
    cli::WriteAtomically(a.log, log.dump(2) + "\n");
  }

  std::string body;
  if (c.format == "json") {
    body = report.dump(2) + "\n";
  } else if (c.format == "csv") {
    body = "# ivqr " + std::string(kVersion) + "\n# config " + config.dump() +
           "\nchecked,disagreements,max_abs_difference\n" + std::to_string(checked) + ',' +
           std::to_string(discrepancies.size()) + ',' + Num(worst, 6) + '\n';
  } else {
    std::ostringstream md;
    md << MarkdownHeader("Oracle cross-check", report);
    md << "| checked | disagreements | max abs difference |\n|---|---|---|\n| " << checked
       << " | " << discrepancies.size() << " | " << Num(worst, 3) << " |\n";
    body = md.str();
  }
  Emit(c, body, report);
  if (!discrepancies.empty()) {
    std::cerr << "ivqr: " << discrepancies.size() << " of " << checked
              << " instances disagree with the oracle; details in " << a.log << "\n";
    return kDisagree;
  }
  return kOk;
}

void AddCommon(CLI::App* app, Common& c, bool bnb_flags) {
  app->add_option("--taus", c.taus, "Quantile indices, comma separated")->delimiter(',');
  app->add_option("--epsilon", c.epsilon, "Sign-constraint margin");
  app->add_option("--box-scale", c.box_scale, "Half-width of the parameter box in 2SLS robust se");
  app->add_option("--bandwidth-mult", c.bandwidth_mult, "Multiplier on the Hall-Sheather bandwidth");
  app->add_option("--alpha", c.alpha, "Confidence level is 1 - alpha");
  app->add_option("--kernel", c.kernel, "gaussian or epanechnikov");
  if (bnb_flags) {
    app->add_option("--time-limit", c.time_limit, "Branch-and-bound time limit per solve (s), 0 = none");
    app->add_option("--node-limit", c.node_limit, "Branch-and-bound node limit per solve, 0 = none");
    app->add_option("--abs-gap", c.abs_gap, "Absolute optimality gap target");
    app->add_option("--rel-gap", c.rel_gap, "Relative optimality gap target");
  }
  app->add_option("--threads", c.threads, "Worker threads (fallback: IVQR_THREADS, then 1)");
  app->add_option("--format", c.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "markdown"}));
  app->add_option("-o,--output", c.output, "Report path; stdout when omitted");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact GMM estimation of instrumental variable quantile regression"};
  app.set_version_flag("--version", std::string(ivqr::kVersion));
  app.require_subcommand(1);

  Common fit_c, sim_c, orc_c;
  FitArgs fit_a;
  SimArgs sim_a;
  OracleArgs orc_a;

  auto* fit = app.add_subcommand("fit", "Estimate theta(tau) on a CSV dataset");
  AddCommon(fit, fit_c, true);
  fit->add_option("--data", fit_a.data, "CSV file")->required();
  fit->add_option("--schema", fit_a.schema, "JSON column-role schema")->required();
  fit->add_option("--node-log", fit_a.node_log, "Write a JSON line per branch-and-bound node");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study on the location-scale design");
  AddCommon(simulate, sim_c, true);
  simulate->add_option("--n", sim_a.n, "Sample size");
  simulate->add_option("--reps", sim_a.reps, "Repetitions");
  simulate->add_option("--seed", sim_a.seed, "Base seed; repetition r uses seed + r");
  simulate->add_option("--bandwidth-mults", sim_a.multipliers, "Bandwidth multipliers swept for coverage")
      ->delimiter(',');
  simulate->add_flag("--no-population-se", sim_a.no_population_se,
                     "Skip the asymptotic se at the true parameters");
  simulate->add_flag("--progress", sim_a.progress, "Report progress on stderr");

  auto* oracle = app.add_subcommand("oracle", "Cross-check branch-and-bound against enumeration");
  AddCommon(oracle, orc_c, true);
  oracle->add_option("--instances", orc_a.instances, "Random instances");
  oracle->add_option("--n", orc_a.n, "Observations per instance (at most 24)");
  oracle->add_option("--p", orc_a.p, "Coefficients, 1 or 2");
  oracle->add_option("--q", orc_a.q, "Instruments, p to 3 (default min(3, p + 1))");
  oracle->add_option("--seed", orc_a.seed, "Base seed");
  oracle->add_flag("--inject-halved-big-m", orc_a.halve_big_m,
                   "Fault injection: solve with every big-M halved");
  oracle->add_option("--log", orc_a.log, "Discrepancy log path");
  oracle->add_option("--data", orc_a.data, "Check a single CSV instance instead");
  oracle->add_option("--schema", orc_a.schema, "Schema for --data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (fit->parsed()) return RunFit(fit_c, fit_a);
    if (simulate->parsed()) return RunSimulate(sim_c, sim_a);
    if (oracle->parsed()) {
      if (!orc_a.data.empty() && orc_a.schema.empty()) {
        throw ivqr::Error(ivqr::ErrorCode::kInvalidArgument, "--data requires --schema");
      }
      return RunOracle(orc_c, orc_a);
    }
  } catch (const ivqr::Error& e) {
    std::cerr << "ivqr: " << e.what() << "\n";
    return ExitFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ivqr: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
