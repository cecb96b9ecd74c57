#include "ivqr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "ivqr/error.hpp"
#include "ivqr/gmm.hpp"
#include "ivqr/normal.hpp"

namespace ivqr::sim {

Matrix DgpConfig::DefaultV() {
  Matrix v(4, 4);
  v << 1.0, 0.4, 0.6, -0.2,
       0.4, 1.0, 0.0, 0.0,
       0.6, 0.0, 1.0, 0.0,
       -0.2, 0.0, 0.0, 1.0;
  return v;
}

void Validate(const DgpConfig& cfg) {
  if (cfg.n < 5) throw Error(ErrorCode::kInvalidArgument, "simulation needs n >= 5");
  if (cfg.v.rows() != 4 || cfg.v.cols() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "V must be 4x4");
  }
  for (int j = 0; j < 4; ++j) {
    if (std::abs(cfg.v(j, j) - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidArgument, "V must have unit diagonal");
    }
  }
  numerics::FactorSpd(cfg.v_scale * cfg.v);
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

double NormalStream::Uniform() {
  // 53 random bits, shifted to the open interval (0, 1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::Normal() { return NormalQuantile(Uniform()); }

Dataset Generate(const DgpConfig& cfg) {
  Validate(cfg);
  const Matrix chol = numerics::FactorSpd(cfg.v_scale * cfg.v).lower();
  NormalStream rng(cfg.seed);
  const Eigen::Index n = cfg.n;
  Vector y(n);
  Matrix d(n, 3), z(n, 3);
  Eigen::Vector4d raw;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) z(i, k) = rng.Normal();
    for (int k = 0; k < 4; ++k) raw(k) = rng.Normal();
    const Eigen::Vector4d u = chol * raw;  // (eps, v1, v2, v3)
    d(i, 0) = NormalCdf(z(i, 0) + u(1));
    d(i, 1) = 2.0 * NormalCdf(z(i, 1) + u(2));
    d(i, 2) = 1.5 * NormalCdf(z(i, 2) + u(3));
    y(i) = 1.0 + d(i, 0) + d(i, 1) + d(i, 2) +
           (0.5 + d(i, 0) + 0.25 * d(i, 1) + 0.15 * d(i, 2)) * u(0);
  }
  Dataset ds;
  ds.y = std::move(y);
  ds.d = std::move(d);
  ds.x = Matrix::Ones(n, 1);
  ds.z = std::move(z);
  ds.d_names = {"D1", "D2", "D3"};
  ds.x_names = {"const"};
  ds.z_names = {"Z1", "Z2", "Z3"};
  return ds;
}

SmallInstance RandomSmallInstance(Eigen::Index n, int p, int q, std::uint64_t seed) {
  if (p < 1 || p > 2 || q < p || q > 3) {
    throw Error(ErrorCode::kInvalidArgument, "small instance needs p in {1,2} and p <= q <= 3");
  }
  if (n < p + 1) throw Error(ErrorCode::kInvalidArgument, "small instance needs n > p");
  const int kz = p == 1 ? q : q - 1;
  NormalStream rng(seed);
  Vector y(n);
  Matrix d(n, 1), z(n, kz);
  for (Eigen::Index i = 0; i < n; ++i) {
    double zsum = 0.0;
    for (int k = 0; k < kz; ++k) {
      z(i, k) = rng.Normal();
      zsum += z(i, k);
    }
    const double v = rng.Normal();
    const double u = 0.5 * v + rng.Normal();
    d(i, 0) = zsum + v;
    y(i) = (p == 2 ? 1.0 : 0.0) + d(i, 0) + u;
  }
  Matrix x = p == 2 ? Matrix(Matrix::Ones(n, 1)) : Matrix(n, 0);
  SmallInstance out{MakeDataset(std::move(y), std::move(d), std::move(x), std::move(z)), {}};
  out.ds.d_names = {"D"};
  if (p == 2) out.ds.x_names = {"const"};
  out.ds.z_names.clear();
  for (int k = 0; k < kz; ++k) out.ds.z_names.push_back("Z" + std::to_string(k + 1));
  out.inst = DefaultInstruments(out.ds);
  return out;
}

Vector TrueTheta(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  const double q = 0.5 * NormalQuantile(tau);  // eps ~ N(0, 0.25)
  Vector t(4);
  t << 1.0 + 0.5 * q, 1.0 + q, 1.0 + 0.25 * q, 1.0 + 0.15 * q;
  return t;
}

Eigen::Index WIndexOfCoefficient(int k) { return k == 0 ? 3 : k - 1; }

Vector TrueThetaWOrder(double tau) {
  const Vector t = TrueTheta(tau);
  Vector w(4);
  for (int k = 0; k < 4; ++k) w(WIndexOfCoefficient(k)) = t(k);
  return w;
}

Vector PopulationAsymptoticSe(double tau, Eigen::Index n, Eigen::Index draws,
                              std::uint64_t seed) {
  // eps | v ~ N(0.4 v1 + 0.6 v2 - 0.2 v3, 0.11) under the default V, and
  // eps_tau = sigma(W) (eps - q_tau), so the conditional density of eps_tau
  // at zero is phi((q_tau - mu) / s) / (s sigma(W)).
  const Matrix cov = 0.25 * DgpConfig::DefaultV();
  const Matrix svv = cov.bottomRightCorner(3, 3);
  const Vector sev = cov.row(0).tail(3).transpose();
  const Vector beta = numerics::SolveSpd(numerics::FactorSpd(svv), sev);
  const double s = std::sqrt(cov(0, 0) - sev.dot(beta));
  const Matrix chol_v = numerics::FactorSpd(svv).lower();
  const double q_tau = 0.5 * NormalQuantile(tau);

  NormalStream rng(seed);
  Matrix swl = Matrix::Zero(4, 4);
  Matrix sll = Matrix::Zero(4, 4);
  Eigen::Vector4d w, l;
  for (Eigen::Index i = 0; i < draws; ++i) {
    Eigen::Vector3d zz, raw;
    for (int k = 0; k < 3; ++k) zz(k) = rng.Normal();
    for (int k = 0; k < 3; ++k) raw(k) = rng.Normal();
    const Eigen::Vector3d v = chol_v * raw;
    const double d1 = NormalCdf(zz(0) + v(0));
    const double d2 = 2.0 * NormalCdf(zz(1) + v(1));
    const double d3 = 1.5 * NormalCdf(zz(2) + v(2));
    const double sigma = 0.5 + d1 + 0.25 * d2 + 0.15 * d3;
    const double mu = beta.dot(Vector(v));
    const double f = NormalPdf((q_tau - mu) / s) / (s * sigma);
    w << 1.0, d1, d2, d3;  // paper order
    l << 1.0, zz(0), zz(1), zz(2);
    swl += f * w * l.transpose();
    sll += l * l.transpose();
  }
  swl /= static_cast<double>(draws);
  sll /= static_cast<double>(draws);
  const Matrix omega = AsymptoticVariance(swl, sll, tau);
  return (omega.diagonal() / static_cast<double>(n)).cwiseSqrt();
}

namespace {

struct RepRecord {
  bool ok = false;
  Vector theta;                // paper order
  std::vector<Vector> se;      // per multiplier, paper order
  double seconds = 0.0;
  double objective = 0.0;
  std::int64_t nodes = 0;
  bool optimal = true;
};

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<RepRecord> RunRep(const DgpConfig& base, int rep, const McOptions& opts) {
  DgpConfig cfg = base;
  cfg.seed = base.seed + static_cast<std::uint64_t>(rep);
  const Dataset ds = Generate(cfg);
  std::vector<RepRecord> out(opts.taus.size());
  InstrumentSet inst;
  try {
    inst = DefaultInstruments(ds);
  } catch (const Error&) {
    return out;
  }
  for (std::size_t t = 0; t < opts.taus.size(); ++t) {
    RepRecord& rec = out[t];
    try {
      QuantileSpec qs{opts.taus[t], opts.epsilon, opts.box_scale};
      GmmSpec gs;
      gs.tau = qs.tau;
      BnbOptions bo = opts.bnb;
      bo.threads = std::max(1, bo.threads);
      const GmmFit fit = FitIvqrGmm(ds, inst, gs, qs, bo);
      rec.theta.resize(4);
      for (int k = 0; k < 4; ++k) rec.theta(k) = fit.theta_hat(WIndexOfCoefficient(k));
      rec.seconds = fit.solve_seconds;
      rec.objective = fit.objective;
      rec.nodes = fit.nodes;
      rec.optimal = fit.status == BnbStatus::kProvedOptimal;
      for (double mult : opts.bandwidth_multipliers) {
        InferenceOptions io;
        io.alpha = opts.alpha;
        io.bandwidth_multiplier = mult;
        io.kernel = opts.kernel;
        const InferenceReport ir = Infer(ds, inst, fit.theta_hat, qs.tau, io);
        Vector se(4);
        for (int k = 0; k < 4; ++k) se(k) = ir.se(WIndexOfCoefficient(k));
        rec.se.push_back(se);
      }
      rec.ok = true;
    } catch (const Error&) {
      rec.ok = false;
    }
  }
  return out;
}

}  // namespace

McSummary RunMonteCarlo(const DgpConfig& cfg, const McOptions& opts) {
  Validate(cfg);
  if (opts.reps < 1) throw Error(ErrorCode::kInvalidArgument, "reps must be >= 1");
  for (double t : opts.taus) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  }
  std::vector<std::vector<RepRecord>> records(static_cast<std::size_t>(opts.reps));
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mu;
  auto work = [&] {
    for (int r = next++; r < opts.reps; r = next++) {
      records[static_cast<std::size_t>(r)] = RunRep(cfg, r, opts);
      const int finished = ++done;
      if (opts.progress) {
        std::lock_guard<std::mutex> lock(progress_mu);
        opts.progress(finished, opts.reps);
      }
    }
  };
  const int threads = std::max(1, std::min(opts.threads, opts.reps));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Deterministic fold in repetition order.
  McSummary s;
  s.cfg = cfg;
  s.opts = opts;
  s.objectives.assign(static_cast<std::size_t>(opts.reps), {});
  const std::size_t nm = opts.bandwidth_multipliers.size();
  std::size_t primary = 0;
  for (std::size_t m = 0; m < nm; ++m) {
    if (std::abs(opts.bandwidth_multipliers[m] - 1.0) < 1e-12) primary = m;
  }
  const double z = NormalQuantile(1.0 - opts.alpha / 2.0);
  for (std::size_t t = 0; t < opts.taus.size(); ++t) {
    const double tau = opts.taus[t];
    const Vector truth = TrueTheta(tau);
    const Vector pop = opts.population_se ? PopulationAsymptoticSe(tau, cfg.n)
                                          : Vector(Vector::Zero(4));
    TimingSummary ts;
    ts.tau = tau;
    std::vector<double> times;
    double nodes = 0.0;
    for (int r = 0; r < opts.reps; ++r) {
      const RepRecord& rec = records[static_cast<std::size_t>(r)][t];
      ++s.attempts;
      s.objectives[static_cast<std::size_t>(r)].push_back(rec.ok ? rec.objective : std::nan(""));
      if (!rec.ok) {
        ++s.failures;
        continue;
      }
      times.push_back(rec.seconds);
      nodes += static_cast<double>(rec.nodes);
      ts.not_optimal += rec.optimal ? 0 : 1;
    }
    if (!times.empty()) {
      ts.mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
      ts.min = *std::min_element(times.begin(), times.end());
      ts.max = *std::max_element(times.begin(), times.end());
      ts.median = Median(times);
      ts.mean_nodes = nodes / static_cast<double>(times.size());
    }
    s.timing.push_back(ts);

    for (int k = 0; k < 4; ++k) {
      CoefficientSummary row;
      row.tau = tau;
      row.coefficient = k;
      row.truth = truth(k);
      row.population_se = pop(k);
      row.coverage.assign(nm, 0.0);
      std::vector<double> err, abs_err;
      double se_sum = 0.0;
      for (int r = 0; r < opts.reps; ++r) {
        const RepRecord& rec = records[static_cast<std::size_t>(r)][t];
        if (!rec.ok) continue;
        const double e = rec.theta(k) - truth(k);
        err.push_back(e);
        abs_err.push_back(std::abs(e));
        se_sum += rec.se[primary](k);
        for (std::size_t m = 0; m < nm; ++m) {
          row.coverage[m] += std::abs(e) <= z * rec.se[m](k) ? 1.0 : 0.0;
        }
      }
      row.used = static_cast<int>(err.size());
      if (row.used > 0) {
        const double cnt = static_cast<double>(row.used);
        row.mean_bias = std::accumulate(err.begin(), err.end(), 0.0) / cnt;
        row.median_bias = Median(err);
        double sq = 0.0, var = 0.0;
        for (double e : err) {
          sq += e * e;
          var += (e - row.mean_bias) * (e - row.mean_bias);
        }
        row.rmse = std::sqrt(sq / cnt);
        row.sd = row.used > 1 ? std::sqrt(var / (cnt - 1.0)) : 0.0;
        row.mae = Median(abs_err);
        row.mean_se = se_sum / cnt;
        for (auto& c : row.coverage) c /= cnt;
      }
      s.rows.push_back(row);
    }
  }
  return s;
}

std::string SummaryCsv(const McSummary& s) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "tau,coefficient,truth,mean_bias,median_bias,rmse,mae,sd,mean_se,population_se";
  for (double m : s.opts.bandwidth_multipliers) out << ",coverage_h" << m;
  out << ",used\n";
  // Wall-clock timings live in the markdown/JSON reports so this file stays
  // byte-identical across runs.
  for (const auto& r : s.rows) {
    out << r.tau << ",theta" << r.coefficient << ',' << r.truth << ',' << r.mean_bias << ','
        << r.median_bias << ',' << r.rmse << ',' << r.mae << ',' << r.sd << ',' << r.mean_se
        << ',' << r.population_se;
    for (double c : r.coverage) out << ',' << c;
    out << ',' << r.used << '\n';
  }
  return out.str();
}

std::string SummaryMarkdown(const McSummary& s) {
  std::ostringstream out;
  out << std::fixed;
  out << "n = " << s.cfg.n << ", repetitions = " << s.opts.reps << ", base seed = "
      << s.cfg.seed << ", failures = " << s.failures << "/" << s.attempts << "\n\n";
  out << "### Branch-and-bound time (seconds)\n\n| tau | mean | min | median | max | mean nodes | not optimal |\n|---|---|---|---|---|---|---|\n";
  for (const auto& t : s.timing) {
    out << std::setprecision(2) << "| " << t.tau << " | " << std::setprecision(3) << t.mean
        << " | " << t.min << " | " << t.median << " | " << t.max << " | "
        << std::setprecision(0) << t.mean_nodes << " | " << t.not_optimal << " |\n";
  }
  out << "\n### Finite-sample performance\n\n| | mean bias | RMSE | median bias | MAE |\n|---|---|---|---|---|\n";
  out << std::setprecision(4);
  for (const auto& r : s.rows) {
    out << "| theta" << r.coefficient << "(" << std::setprecision(2) << r.tau << ") | "
        << std::setprecision(4) << r.mean_bias << " | " << r.rmse << " | " << r.median_bias
        << " | " << r.mae << " |\n";
  }
  out << "\n### Asymptotic approximation\n\n| | sd in simulations | mean estimated se | asymptotic se at truth |\n|---|---|---|---|\n";
  for (const auto& r : s.rows) {
    out << "| theta" << r.coefficient << "(" << std::setprecision(2) << r.tau << ") | "
        << std::setprecision(4) << r.sd << " | " << r.mean_se << " | " << r.population_se
        << " |\n";
  }
  out << "\n### Coverage of " << std::setprecision(0) << 100.0 * (1.0 - s.opts.alpha)
      << "% CI\n\n|";
  for (double m : s.opts.bandwidth_multipliers) out << " | " << std::setprecision(1) << m << " h_HS";
  out << " |\n|---";
  for (std::size_t m = 0; m < s.opts.bandwidth_multipliers.size(); ++m) out << "|---";
  out << "|\n";
  for (const auto& r : s.rows) {
    out << "| theta" << r.coefficient << "(" << std::setprecision(2) << r.tau << ")";
    for (double c : r.coverage) out << " | " << std::setprecision(3) << c;
    out << " |\n";
  }
  return out.str();
}

}  // namespace ivqr::sim
