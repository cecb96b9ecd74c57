// Branch-and-bound for the IVQR MIQP.
//
// A node fixes some e_i by branching. Because e enters the objective and θ
// only the constraints, the feasible θ of a node form a polytope P (box plus
// one half-space per branching row). Every other e_i whose sign is constant
// over P is implied; we detect this with small LPs over P, using cached
// points of P to skip most of them. The relaxation of the remaining free
// e_i over [0, 1] is a box-constrained convex QP in e alone, solved by
// coordinate descent with a Frank-Wolfe certificate so the bound stays valid
// even if the solve is cut short.
//
// With a valid big-M the M-side of each sign constraint is redundant over the
// box. Any m_i below the closed-form bound instead cuts |y_i - w_i'θ| <= m_i
// out of the root polytope, so the solver answers the problem as posed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "ivqr/error.hpp"
#include "ivqr/miqp.hpp"
#include "ivqr/qp.hpp"

namespace ivqr {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClassifyTol = 1e-9;
constexpr double kIntegralityTol = 1e-6;
constexpr std::size_t kMaxPoints = 24;
constexpr int kMaxSweeps = 200;

struct Precomputed {
  Matrix lq;    // n x q, row i = (Q L_i)'
  Vector diag;  // L_i' Q L_i
};

Precomputed Precompute(const MiqpProblem& prob) {
  Precomputed pc;
  pc.lq = prob.g * prob.q_hat;
  pc.diag = (pc.lq.array() * prob.g.array()).rowwise().sum();
  return pc;
}

RelaxationBound Relax(const MiqpProblem& prob, const Precomputed& pc,
                      const std::vector<std::int8_t>& status, const Vector& warm_e,
                      double cutoff) {
  const Eigen::Index n = prob.n();
  RelaxationBound out;
  out.e.resize(n);
  std::vector<Eigen::Index> free_idx;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = status[static_cast<std::size_t>(i)];
    if (s > 0) {
      out.e(i) = 1.0;
    } else if (s < 0) {
      out.e(i) = 0.0;
    } else {
      out.e(i) = warm_e.size() == n ? std::clamp(warm_e(i), 0.0, 1.0) : 0.5;
      free_idx.push_back(i);
    }
  }
  Vector u = prob.g.transpose() * (out.e.array() - prob.tau).matrix();
  auto objective = [&] { return u.dot(prob.q_hat * u); };

  double f = objective();
  if (free_idx.empty()) {
    out.primal = f;
    out.lower_bound = f;
    return out;
  }
  double lb = 0.0;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (Eigen::Index i : free_idx) {
      const double d = pc.diag(i);
      if (!(d > 0.0)) continue;
      const double a = pc.lq.row(i).dot(u);
      const double next = std::clamp(out.e(i) - a / d, 0.0, 1.0);
      const double delta = next - out.e(i);
      if (delta != 0.0) {
        out.e(i) = next;
        u += delta * prob.g.row(i).transpose();
      }
    }
    f = objective();
    double dual = f;
    for (Eigen::Index i : free_idx) {
      const double a = pc.lq.row(i).dot(u);
      dual += 2.0 * (std::min(0.0, a) - out.e(i) * a);
    }
    lb = std::max(lb, dual);
    if (lb >= cutoff) break;              // prunable
    if (f < cutoff) break;                // relaxation below incumbent: cannot prune
    if (f - lb <= 1e-12 + 1e-10 * f) break;
  }
  out.primal = f;
  out.lower_bound = std::max(0.0, lb);
  return out;
}

struct NodeLess {
  bool operator()(const std::pair<double, std::int64_t>& a,
                  const std::pair<double, std::int64_t>& b) const {
    return a < b;
  }
};

class Solver {
 public:
  Solver(const MiqpProblem& prob, const BnbOptions& opts)
      : prob_(prob), opts_(opts), pc_(Precompute(prob)), start_(Clock::now()) {
    BigMRows();
  }

  BnbResult Run();

 private:
  enum class Outcome { kInfeasible, kPruned, kLeaf, kBranched };

  struct Processed {
    Outcome outcome = Outcome::kPruned;
    std::unique_ptr<BnbNode> preferred;
    std::unique_ptr<BnbNode> other;
  };

  std::unique_ptr<BnbNode> MakeRoot() const;
  Processed Process(BnbNode& node, std::int64_t id);
  bool Classify(BnbNode& node);
  std::optional<Vector> ExtremePoint(const BnbNode& node, Eigen::Index i, bool maximize,
                                     const Vector& start);
  void OfferIncumbent(const std::vector<std::uint8_t>& e, double obj, const Vector& theta);
  double PruneTolerance(double incumbent) const;
  double GapTarget(double incumbent) const;
  void Worker();
  bool LimitsHit() const;
  Vector FinalTheta(const std::vector<std::uint8_t>& e, const Vector& fallback) const;
  void BigMRows();
  bool InBase(const Vector& theta) const;
  bool Acceptable(const Incumbent& inc, const Vector& theta) const;

  const MiqpProblem& prob_;
  BnbOptions opts_;
  Precomputed pc_;
  Clock::time_point start_;
  // Non-redundant big-M rows shared by every node.
  Matrix base_a_;
  Vector base_b_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::pair<double, std::int64_t>, std::unique_ptr<BnbNode>, NodeLess> pool_;
  std::multiset<double> in_process_;
  std::int64_t next_seq_ = 0;
  int active_ = 0;
  bool stop_ = false;
  bool limit_stop_ = false;
  bool gap_stop_ = false;
  double pruned_min_lb_ = kInf;

  // Incumbent, guarded by mu_; incumbent_obj_ is also read lock-free.
  std::atomic<double> incumbent_obj_{kInf};
  std::vector<std::uint8_t> incumbent_e_;
  Vector incumbent_theta_;

  std::atomic<std::int64_t> nodes_{0};
  std::atomic<std::int64_t> lps_{0};
};

double Solver::GapTarget(double incumbent) const {
  const double base = 1e-9 * (1.0 + std::abs(incumbent));
  double target = opts_.abs_gap > 0.0 ? std::max(base, opts_.abs_gap) : base;
  if (opts_.rel_gap > 0.0) target = std::max(target, opts_.rel_gap * std::abs(incumbent));
  return target;
}

double Solver::PruneTolerance(double incumbent) const { return GapTarget(incumbent); }

bool Solver::LimitsHit() const {
  if (opts_.time_limit_seconds > 0.0) {
    const std::chrono::duration<double> el = Clock::now() - start_;
    if (el.count() >= opts_.time_limit_seconds) return true;
  }
  return opts_.node_limit > 0 && nodes_.load() >= opts_.node_limit;
}

void Solver::BigMRows() {
  const Eigen::Index n = prob_.n();
  const Eigen::Index p = prob_.p();
  std::vector<std::pair<Vector, double>> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double a = prob_.w(i, j) * prob_.box.lo(j);
      const double b = prob_.w(i, j) * prob_.box.hi(j);
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    const double m = prob_.big_m.m(i);
    if (hi > prob_.y(i) + m + prob_.epsilon) {
      rows.emplace_back(prob_.w.row(i).transpose(), prob_.y(i) + m + prob_.epsilon);
    }
    if (lo < prob_.y(i) - m) rows.emplace_back(-prob_.w.row(i).transpose(), m - prob_.y(i));
  }
  base_a_.resize(static_cast<Eigen::Index>(rows.size()), p);
  base_b_.resize(base_a_.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    base_a_.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
    base_b_(static_cast<Eigen::Index>(r)) = rows[r].second;
  }
}

bool Solver::InBase(const Vector& theta) const {
  if (base_a_.rows() == 0) return true;
  return ((base_a_ * theta - base_b_).array() <= kClassifyTol).all();
}

bool Solver::Acceptable(const Incumbent& inc, const Vector& theta) const {
  return inc.margin_violations == 0 && InBase(theta);
}

std::unique_ptr<BnbNode> Solver::MakeRoot() const {
  auto root = std::make_unique<BnbNode>();
  const Eigen::Index n = prob_.n();
  const Eigen::Index p = prob_.p();
  root->status.assign(static_cast<std::size_t>(n), 0);
  root->relax_e = Vector::Constant(n, 0.5);
  const Vector center = prob_.box.Center();
  root->points.push_back(center);
  if (p <= 5) {
    for (std::int64_t mask = 0; mask < (std::int64_t{1} << p); ++mask) {
      Vector v(p);
      for (Eigen::Index j = 0; j < p; ++j) {
        v(j) = (mask >> j) & 1 ? prob_.box.hi(j) : prob_.box.lo(j);
      }
      root->points.push_back(v);
    }
  } else {
    for (Eigen::Index j = 0; j < p; ++j) {
      Vector a = center, b = center;
      a(j) = prob_.box.lo(j);
      b(j) = prob_.box.hi(j);
      root->points.push_back(a);
      root->points.push_back(b);
    }
  }
  if (base_a_.rows() > 0) {
    std::erase_if(root->points, [&](const Vector& v) { return !InBase(v); });
    if (root->points.empty()) {
      QpOptions o;
      o.tol = 1e-10;
      o.warm_start = center;
      const Phase1Result ph = FeasibilityPhase1(base_a_, base_b_, prob_.box.lo, prob_.box.hi, o);
      if (!ph.feasible) return nullptr;
      root->points.push_back(ph.v);
    }
  }
  return root;
}

std::optional<Vector> Solver::ExtremePoint(const BnbNode& node, Eigen::Index i,
                                           bool maximize, const Vector& start) {
  const Eigen::Index p = prob_.p();
  QpProblem lp;
  lp.H = Matrix::Zero(p, p);
  lp.c = maximize ? Vector(-prob_.w.row(i).transpose()) : Vector(prob_.w.row(i).transpose());
  const Eigen::Index nb = base_a_.rows();
  lp.A.resize(nb + static_cast<Eigen::Index>(node.branched.size()), p);
  lp.b.resize(lp.A.rows());
  lp.A.topRows(nb) = base_a_;
  lp.b.head(nb) = base_b_;
  for (std::size_t k = 0; k < node.branched.size(); ++k) {
    const auto r = nb + static_cast<Eigen::Index>(k);
    const std::int32_t code = node.branched[k];
    const Eigen::Index j = std::abs(code) - 1;
    if (code > 0) {  // e_j = 1: w_j'θ >= y_j
      lp.A.row(r) = -prob_.w.row(j);
      lp.b(r) = -prob_.y(j);
    } else {         // e_j = 0: w_j'θ <= y_j - margin
      lp.A.row(r) = prob_.w.row(j);
      lp.b(r) = prob_.y(j) - prob_.margin;
    }
  }
  lp.lower = prob_.box.lo;
  lp.upper = prob_.box.hi;
  QpOptions o;
  o.tol = 1e-9;
  o.warm_start = start;
  ++lps_;
  const QpSolution sol = SolveQp(lp, o);
  if (sol.status != QpStatus::kOptimal) return std::nullopt;
  return sol.v;
}

Vector Centroid(const std::vector<Vector>& pts) {
  Vector c = Vector::Zero(pts.front().size());
  for (const auto& v : pts) c += v;
  return c / static_cast<double>(pts.size());
}

bool Solver::Classify(BnbNode& node) {
  const Eigen::Index n = prob_.n();
  const double margin = prob_.margin;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& s = node.status[static_cast<std::size_t>(i)];
    if (s != 0) continue;
    bool can_one = false;   // some point with residual <= 0
    bool can_zero = false;  // some point with residual >= margin
    for (const auto& v : node.points) {
      const double r = prob_.y(i) - prob_.w.row(i).dot(v);
      can_one = can_one || r <= kClassifyTol;
      can_zero = can_zero || r >= margin - kClassifyTol;
      if (can_one && can_zero) break;
    }
    if (can_one && can_zero) continue;
    const Vector start = Centroid(node.points);
    if (!can_one) {
      auto v = ExtremePoint(node, i, /*maximize=*/true, start);
      if (v && prob_.y(i) - prob_.w.row(i).dot(*v) <= kClassifyTol) {
        can_one = true;
        node.points.push_back(*v);
      }
    }
    if (!can_zero) {
      auto v = ExtremePoint(node, i, /*maximize=*/false, start);
      if (v && prob_.y(i) - prob_.w.row(i).dot(*v) >= margin - kClassifyTol) {
        can_zero = true;
        node.points.push_back(*v);
      }
    }
    if (node.points.size() > kMaxPoints) {
      node.points.erase(node.points.begin(),
                        node.points.begin() + static_cast<long>(node.points.size() - kMaxPoints));
    }
    if (!can_one && !can_zero) return false;
    if (!can_one) s = -1;
    else if (!can_zero) s = 1;
  }
  return true;
}

void Solver::OfferIncumbent(const std::vector<std::uint8_t>& e, double obj,
                            const Vector& theta) {
  if (obj >= incumbent_obj_.load()) return;
  std::lock_guard<std::mutex> lock(mu_);
  if (obj < incumbent_obj_.load()) {
    incumbent_obj_.store(obj);
    incumbent_e_ = e;
    incumbent_theta_ = theta;
  }
}

Solver::Processed Solver::Process(BnbNode& node, std::int64_t id) {
  Processed out;
  if (!Classify(node)) {
    out.outcome = Outcome::kInfeasible;
    return out;
  }
  const double cutoff = incumbent_obj_.load();
  RelaxationBound rb = Relax(prob_, pc_, node.status, node.relax_e,
                             cutoff - PruneTolerance(cutoff));
  node.lower_bound = std::max(node.lower_bound, rb.lower_bound);

  // Incumbent candidate at an interior point of P.
  const Vector theta = Centroid(node.points);
  const Incumbent inc = HeuristicIncumbent(prob_, theta);
  bool improved = false;
  if (Acceptable(inc, theta) && inc.objective < incumbent_obj_.load()) {
    OfferIncumbent(inc.e, inc.objective, theta);
    improved = true;
  }

  std::size_t num_free = 0;
  for (auto s : node.status) num_free += s == 0;

  if (opts_.node_log) {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t f1 = 0;
    for (auto s : node.status) f1 += s > 0;
    *opts_.node_log << "{\"node\":" << id << ",\"depth\":" << node.depth
                    << ",\"bound\":" << node.lower_bound << ",\"fixed0\":"
                    << node.status.size() - num_free - f1 << ",\"fixed1\":" << f1
                    << ",\"free\":" << num_free << ",\"incumbent\":";
    const double incv = incumbent_obj_.load();
    if (std::isfinite(incv)) *opts_.node_log << incv; else *opts_.node_log << "null";
    *opts_.node_log << "}\n";
  }

  const double inc_now = incumbent_obj_.load();
  if (node.lower_bound >= inc_now - PruneTolerance(inc_now)) {
    std::lock_guard<std::mutex> lock(mu_);
    pruned_min_lb_ = std::min(pruned_min_lb_, node.lower_bound);
    out.outcome = Outcome::kPruned;
    return out;
  }
  if (num_free == 0) {
    // All signs determined: the relaxation value is the exact objective.
    std::vector<std::uint8_t> e(node.status.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = node.status[i] > 0 ? 1 : 0;
    OfferIncumbent(e, rb.primal, theta);
    std::lock_guard<std::mutex> lock(mu_);
    pruned_min_lb_ = std::min(pruned_min_lb_, rb.primal);
    out.outcome = Outcome::kLeaf;
    return out;
  }

  // Most fractional free e_i; smallest index wins ties.
  Eigen::Index branch = -1;
  double best = kInf;
  for (Eigen::Index i = 0; i < prob_.n(); ++i) {
    if (node.status[static_cast<std::size_t>(i)] != 0) continue;
    const double score = std::abs(rb.e(i) - 0.5);
    if (score < best) {
      best = score;
      branch = i;
    }
  }
  const bool up_first = rb.e(branch) >= 0.5;

  auto make_child = [&](bool one) {
    auto c = std::make_unique<BnbNode>();
    c->status = node.status;
    c->status[static_cast<std::size_t>(branch)] = one ? 1 : -1;
    c->branched = node.branched;
    c->branched.push_back(one ? static_cast<std::int32_t>(branch + 1)
                              : -static_cast<std::int32_t>(branch + 1));
    for (const auto& v : node.points) {
      const double r = prob_.y(branch) - prob_.w.row(branch).dot(v);
      if (one ? r <= kClassifyTol : r >= prob_.margin - kClassifyTol) c->points.push_back(v);
    }
    c->relax_e = rb.e;
    c->relax_e(branch) = one ? 1.0 : 0.0;
    c->lower_bound = node.lower_bound;
    c->depth = node.depth + 1;
    return c;
  };
  out.outcome = Outcome::kBranched;
  out.preferred = make_child(up_first);
  out.other = make_child(!up_first);
  (void)improved;
  return out;
}

void Solver::Worker() {
  std::unique_ptr<BnbNode> local;
  double local_lb = 0.0;
  bool plunging = false;
  for (;;) {
    std::unique_ptr<BnbNode> node;
    std::int64_t id = 0;
    {
      std::unique_lock<std::mutex> lock(mu_);
      if (local) {
        node = std::move(local);
        // local_lb already registered in in_process_.
      } else {
        cv_.wait(lock, [&] { return stop_ || !pool_.empty() || active_ == 0; });
        if (stop_ || (pool_.empty() && active_ == 0)) {
          cv_.notify_all();
          return;
        }
        auto it = pool_.begin();
        node = std::move(it->second);
        pool_.erase(it);
        ++active_;
        local_lb = node->lower_bound;
        in_process_.insert(local_lb);
      }
      id = nodes_++;
    }

    const double before = incumbent_obj_.load();
    Processed res = Process(*node, id);
    const bool new_incumbent = incumbent_obj_.load() < before;
    if (new_incumbent) plunging = true;

    std::unique_lock<std::mutex> lock(mu_);
    in_process_.erase(in_process_.find(local_lb));
    if (res.outcome == Outcome::kBranched) {
      if (plunging) {
        local = std::move(res.preferred);
        local_lb = local->lower_bound;
        in_process_.insert(local_lb);
      } else {
        const double lb = res.preferred->lower_bound;
        pool_.emplace(std::make_pair(lb, next_seq_++), std::move(res.preferred));
      }
      const double lb = res.other->lower_bound;
      pool_.emplace(std::make_pair(lb, next_seq_++), std::move(res.other));
    } else {
      plunging = false;
    }

    // Drop pool nodes that the incumbent now dominates.
    const double inc = incumbent_obj_.load();
    if (std::isfinite(inc)) {
      const double thresh = inc - PruneTolerance(inc);
      while (!pool_.empty()) {
        auto last = std::prev(pool_.end());
        if (last->first.first < thresh) break;
        pruned_min_lb_ = std::min(pruned_min_lb_, last->first.first);
        pool_.erase(last);
      }
    }

    double global_lb = std::min(inc, pruned_min_lb_);
    if (!pool_.empty()) global_lb = std::min(global_lb, pool_.begin()->first.first);
    if (!in_process_.empty()) global_lb = std::min(global_lb, *in_process_.begin());
    if (std::isfinite(inc) && inc - global_lb <= GapTarget(inc) &&
        !(pool_.empty() && in_process_.empty())) {
      gap_stop_ = true;
      stop_ = true;
    }
    if (!stop_ && LimitsHit()) {
      limit_stop_ = true;
      stop_ = true;
    }
    if (stop_) {
      if (local) {
        pool_.emplace(std::make_pair(local->lower_bound, next_seq_++), std::move(local));
        in_process_.erase(in_process_.find(local_lb));
      }
      --active_;
      cv_.notify_all();
      return;
    }
    if (!local) --active_;
    cv_.notify_all();
  }
}

Vector Solver::FinalTheta(const std::vector<std::uint8_t>& e, const Vector& fallback) const {
  // Chebyshev-style center of the cell {θ : (e, θ) feasible}: maximize t with
  // every row satisfied with slack t * ||row||.
  const Eigen::Index p = prob_.p();
  Matrix a;
  Vector b;
  prob_.ThetaRowsForSigns(e, a, b);
  QpProblem lp;
  lp.H = Matrix::Zero(p + 1, p + 1);
  lp.c = Vector::Zero(p + 1);
  lp.c(p) = -1.0;
  lp.A.resize(a.rows() + 2 * p, p + 1);
  lp.b.resize(a.rows() + 2 * p);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    lp.A.row(r).head(p) = a.row(r);
    lp.A(r, p) = a.row(r).norm();
    lp.b(r) = b(r);
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index r = a.rows() + 2 * j;
    lp.A.row(r).setZero();
    lp.A(r, j) = 1.0;
    lp.A(r, p) = 1.0;
    lp.b(r) = prob_.box.hi(j);
    lp.A.row(r + 1).setZero();
    lp.A(r + 1, j) = -1.0;
    lp.A(r + 1, p) = 1.0;
    lp.b(r + 1) = -prob_.box.lo(j);
  }
  lp.lower = Vector::Constant(p + 1, -kInf);
  lp.upper = Vector::Constant(p + 1, kInf);
  lp.lower(p) = 0.0;
  lp.upper(p) = (prob_.box.hi - prob_.box.lo).maxCoeff();
  QpOptions o;
  o.tol = 1e-10;
  Vector start(p + 1);
  start.head(p) = fallback;
  start(p) = 0.0;
  o.warm_start = start;
  const QpSolution sol = SolveQp(lp, o);
  if (sol.status == QpStatus::kOptimal && sol.v(p) > 0.0) return sol.v.head(p);
  return fallback;
}

BnbResult Solver::Run() {
  {
    // Root incumbent at the box center (the 2SLS point in the standard pipeline).
    const Vector center = prob_.box.Center();
    const Incumbent inc = HeuristicIncumbent(prob_, center);
    if (Acceptable(inc, center)) OfferIncumbent(inc.e, inc.objective, center);
  }
  {
    auto root = MakeRoot();
    if (!root) {
      throw Error(ErrorCode::kNoFeasibleSolution, "big-M rows leave no feasible theta in the box");
    }
    pool_.emplace(std::make_pair(0.0, next_seq_++), std::move(root));
  }
  const int threads = std::max(1, opts_.threads);
  if (threads == 1) {
    Worker();
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) workers.emplace_back([this] { Worker(); });
    for (auto& t : workers) t.join();
  }

  BnbResult res;
  res.wall_time = Clock::now() - start_;
  res.nodes_explored = nodes_.load();
  res.lp_solves = lps_.load();
  const double inc = incumbent_obj_.load();
  if (!std::isfinite(inc)) {
    throw Error(ErrorCode::kNoFeasibleSolution, "branch-and-bound found no feasible sign vector");
  }
  double lb = std::min(inc, pruned_min_lb_);
  if (!pool_.empty()) lb = std::min(lb, pool_.begin()->first.first);
  res.objective = inc;
  res.lower_bound = std::max(0.0, lb);
  res.gap = std::max(0.0, res.objective - res.lower_bound);
  res.e_hat = incumbent_e_;
  res.theta_hat = FinalTheta(incumbent_e_, incumbent_theta_);
  if (prob_.Violation(res.e_hat, res.theta_hat) > prob_.Violation(res.e_hat, incumbent_theta_)) {
    res.theta_hat = incumbent_theta_;
  }
  res.max_violation = prob_.Violation(res.e_hat, res.theta_hat);
  const Vector r = prob_.y - prob_.w * res.theta_hat;
  for (Eigen::Index i = 0; i < r.size(); ++i) res.ties += std::abs(r(i)) < prob_.margin;

  const double tight = 1e-9 * (1.0 + std::abs(inc));
  if (res.gap <= tight) {
    res.status = BnbStatus::kProvedOptimal;
  } else if (limit_stop_) {
    res.status = opts_.node_limit > 0 && res.nodes_explored >= opts_.node_limit
                     ? BnbStatus::kNodeLimit
                     : BnbStatus::kTimeLimit;
  } else {
    res.status = BnbStatus::kGapReached;
  }
  return res;
}

}  // namespace

RelaxationBound SolveNodeRelaxation(const MiqpProblem& prob,
                                    const std::vector<std::int8_t>& status,
                                    const Vector& warm_e, double cutoff) {
  return Relax(prob, Precompute(prob), status, warm_e, cutoff);
}

BnbResult BranchAndBound(const MiqpProblem& prob, const BnbOptions& opts) {
  Solver solver(prob, opts);
  return solver.Run();
}

}  // namespace ivqr
