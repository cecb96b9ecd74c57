#include "ivqr/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "ivqr/error.hpp"
#include "ivqr/qp.hpp"

namespace ivqr {

Vector SignVector(const Vector& y, const Matrix& w, const Vector& theta, double tau) {
  if (w.cols() != theta.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "theta has wrong dimension");
  }
  const Vector fitted = w * theta;
  Vector s(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) s(i) = (y(i) <= fitted(i) ? 1.0 : 0.0) - tau;
  return s;
}

Vector SignVector(const Dataset& ds, const Vector& theta, double tau) {
  return SignVector(ds.y, ds.W(), theta, tau);
}

Matrix WeightMatrix(const Matrix& l, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  const double n = static_cast<double>(l.rows());
  const Matrix s = numerics::Symmetrize(tau * (1.0 - tau) * (l.transpose() * l) / n);
  try {
    return numerics::InvertSpd(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSingularInstruments, e.what());
  }
}

Matrix WeightMatrix(const InstrumentSet& inst, double tau) { return WeightMatrix(inst.l, tau); }

double GmmObjective(const Vector& y, const Matrix& w, const Matrix& g, const Vector& theta,
                    double tau, const Matrix& q_hat) {
  const Vector m = g.transpose() * SignVector(y, w, theta, tau);
  return m.dot(q_hat * m);
}

double GmmObjective(const Dataset& ds, const InstrumentSet& inst, const Vector& theta,
                    double tau, const Matrix& q_hat) {
  return GmmObjective(ds.y, ds.W(), inst.l, theta, tau, q_hat);
}

std::string SignString(const std::vector<std::uint8_t>& e) {
  std::string s;
  s.reserve(e.size());
  for (auto v : e) s.push_back(v ? '1' : '0');
  return s;
}

GmmFit FitIvqrGmm(const Dataset& ds, const InstrumentSet& inst, const GmmSpec& spec,
                  const QuantileSpec& qspec, const BnbOptions& opts) {
  Validate(qspec);
  GmmFit fit;
  fit.tsls = FitTsls(ds, inst);
  fit.box = BuildParameterBox(fit.tsls, qspec.box_scale);
  if (spec.weight) {
    try {
      numerics::FactorSpd(numerics::Symmetrize(*spec.weight));
    } catch (const Error& e) {
      throw Error(ErrorCode::kNotPositiveDefinite,
                  std::string("user weight matrix: ") + e.what());
    }
    fit.q_hat = numerics::Symmetrize(*spec.weight);
  } else {
    fit.q_hat = WeightMatrix(inst, qspec.tau);
  }
  const MiqpProblem prob = BuildProblem(ds, inst, qspec, fit.box, fit.q_hat);
  const BnbResult res = BranchAndBound(prob, opts);
  fit.theta_hat = res.theta_hat;
  fit.e_hat = res.e_hat;
  fit.objective = res.objective;
  fit.gap = res.gap;
  fit.lower_bound = res.lower_bound;
  fit.status = res.status;
  fit.nodes = res.nodes_explored;
  fit.solve_seconds = res.wall_time.count();
  fit.ties = res.ties;

  if (prob.p() == 1) {
    double lo = fit.box.lo(0), hi = fit.box.hi(0);
    Matrix a;
    Vector b;
    prob.ThetaRowsForSigns(res.e_hat, a, b);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (a(r, 0) > 0.0) hi = std::min(hi, b(r) / a(r, 0));
      if (a(r, 0) < 0.0) lo = std::max(lo, b(r) / a(r, 0));
    }
    fit.theta_interval = std::make_pair(lo, hi);
  }
  return fit;
}

namespace {

// Theta candidates around every vertex of the arrangement formed by the
// residual hyperplanes and the box facets.
void ArrangementCandidates(const MiqpProblem& prob,
                           const std::function<void(const Vector&)>& visit) {
  const Eigen::Index n = prob.n();
  const Eigen::Index p = prob.p();
  constexpr double kDelta = 1e-7;
  // Enumerate k hyperplanes and p - k box facets.
  std::vector<int> hyper;
  std::function<void(int, int)> choose_hyper;
  auto solve_vertex = [&](const std::vector<int>& hs, const std::vector<int>& facets_dims,
                          const std::vector<int>& facet_side) {
    Matrix a(p, p);
    Vector c(p);
    Eigen::Index r = 0;
    for (int i : hs) {
      a.row(r) = prob.w.row(i);
      c(r) = prob.y(i);
      ++r;
    }
    for (std::size_t k = 0; k < facets_dims.size(); ++k) {
      a.row(r).setZero();
      a(r, facets_dims[k]) = 1.0;
      c(r) = facet_side[k] ? prob.box.hi(facets_dims[k]) : prob.box.lo(facets_dims[k]);
      ++r;
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (lu.rank() < p) return;
    const Vector v = lu.solve(c);
    if (!prob.box.Contains(v, 1e-9)) return;
    // Axis perturbations.
    for (std::int64_t mask = 0; mask < (std::int64_t{1} << p); ++mask) {
      Vector t = v;
      for (Eigen::Index j = 0; j < p; ++j) t(j) += (mask >> j) & 1 ? kDelta : -kDelta;
      visit(t.cwiseMax(prob.box.lo).cwiseMin(prob.box.hi));
    }
    // Perturbations that realize every local sign pattern of the hyperplanes
    // through v, moving inward on box facets.
    const int k = static_cast<int>(hs.size());
    for (std::int64_t mask = 0; mask < (std::int64_t{1} << k); ++mask) {
      Vector rhs(p);
      for (int h = 0; h < k; ++h) rhs(h) = (mask >> h) & 1 ? kDelta : -kDelta;
      for (std::size_t f = 0; f < facets_dims.size(); ++f) {
        rhs(k + static_cast<Eigen::Index>(f)) = facet_side[f] ? -kDelta : kDelta;
      }
      visit(v + lu.solve(rhs));
    }
  };
  for (Eigen::Index k = 0; k <= std::min(p, n); ++k) {
    // All k-subsets of observations.
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::function<void(int, int)> rec_h = [&](int start, int depth) {
      if (depth == k) {
        // All (p-k)-subsets of coordinates with a side each.
        const int f = static_cast<int>(p - k);
        std::vector<int> dims(static_cast<std::size_t>(f));
        std::function<void(int, int)> rec_d = [&](int s, int dd) {
          if (dd == f) {
            for (std::int64_t sides = 0; sides < (std::int64_t{1} << f); ++sides) {
              std::vector<int> side(static_cast<std::size_t>(f));
              for (int q = 0; q < f; ++q) side[static_cast<std::size_t>(q)] = (sides >> q) & 1;
              solve_vertex(idx, dims, side);
            }
            return;
          }
          for (int j = s; j < p; ++j) {
            dims[static_cast<std::size_t>(dd)] = j;
            rec_d(j + 1, dd + 1);
          }
        };
        rec_d(0, 0);
        return;
      }
      for (int i = start; i < n; ++i) {
        idx[static_cast<std::size_t>(depth)] = i;
        rec_h(i + 1, depth + 1);
      }
    };
    rec_h(0, 0);
  }
}

}  // namespace

OracleResult OracleEnumerate(const MiqpProblem& prob, std::uint64_t seed, int random_samples) {
  const Eigen::Index n = prob.n();
  const Eigen::Index p = prob.p();
  if (n > kOracleMaxN) {
    throw Error(ErrorCode::kTooLarge, "oracle enumeration limited to n <= " +
                                          std::to_string(kOracleMaxN) + ", got " +
                                          std::to_string(n));
  }
  OracleResult out;
  out.objective = std::numeric_limits<double>::infinity();

  // (a) Depth-first over e in {0,1}^n. A prefix whose rows are infeasible has
  // no feasible completion, so its subtree is skipped.
  std::vector<std::uint8_t> e(static_cast<std::size_t>(n), 0);
  Matrix a_full;
  Vector b_full;
  QpOptions opts;
  opts.tol = 1e-8;
  std::function<void(Eigen::Index)> dfs = [&](Eigen::Index depth) {
    if (depth > 0) {
      prob.ThetaRowsForSigns(e, a_full, b_full);
      Matrix a(2 * depth, p);
      Vector b(2 * depth);
      a.topRows(depth) = a_full.topRows(depth);
      b.head(depth) = b_full.head(depth);
      a.bottomRows(depth) = a_full.middleRows(n, depth);
      b.tail(depth) = b_full.segment(n, depth);
      opts.warm_start = prob.box.Center();
      if (!FeasibilityPhase1(a, b, prob.box.lo, prob.box.hi, opts).feasible) return;
    }
    if (depth == n) {
      Vector ev(n);
      for (Eigen::Index i = 0; i < n; ++i) ev(i) = e[static_cast<std::size_t>(i)];
      const double obj = prob.Objective(ev);
      ++out.feasible_vectors;
      if (obj < out.objective) {
        out.objective = obj;
        out.e = e;
      }
      return;
    }
    for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{1}}) {
      e[static_cast<std::size_t>(depth)] = v;
      dfs(depth + 1);
    }
    e[static_cast<std::size_t>(depth)] = 0;
  };
  dfs(0);

  // (b) Candidate theta points.
  out.candidate_objective = std::numeric_limits<double>::infinity();
  auto visit = [&](const Vector& theta) {
    const double obj = GmmObjective(prob.y, prob.w, prob.g, theta, prob.tau, prob.q_hat);
    if (obj < out.candidate_objective) {
      out.candidate_objective = obj;
      const Vector s = SignVector(prob.y, prob.w, theta, prob.tau);
      out.candidate_e.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) out.candidate_e[static_cast<std::size_t>(i)] = s(i) > 0.0;
    }
  };
  ArrangementCandidates(prob, visit);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < random_samples; ++s) {
    Vector theta(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      theta(j) = prob.box.lo(j) + unif(rng) * (prob.box.hi(j) - prob.box.lo(j));
    }
    visit(theta);
  }
  if (!std::isfinite(out.objective)) {
    throw Error(ErrorCode::kNoFeasibleSolution, "oracle found no feasible sign vector");
  }
  return out;
}

OracleResult OracleEnumerate(const Dataset& ds, const Matrix& l, double tau, const Matrix& q_hat,
                             const ParameterBox& box, double epsilon) {
  QuantileSpec spec;
  spec.tau = tau;
  spec.epsilon = epsilon;
  const Matrix w = ds.W();
  return OracleEnumerate(
      BuildProblem(ds.y, w, l, spec, box, q_hat, ComputeBigM(ds.y, w, box)));
}

}  // namespace ivqr
