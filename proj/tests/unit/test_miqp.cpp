#include <gtest/gtest.h>

#include <random>

#include "instances.hpp"
#include "ivqr/error.hpp"
#include "ivqr/miqp.hpp"
#include "test_util.hpp"

using namespace ivqr;
using ivqr::testing::HandProblem;
using ivqr::testing::RandomMatrix;
using ivqr::testing::RandomVector;

namespace {

ParameterBox UnitBox(Eigen::Index p) {
  ParameterBox box;
  box.lo = Vector::Constant(p, -1.0);
  box.hi = Vector::Constant(p, 1.0);
  return box;
}

}  // namespace

TEST(ComputeBigM, ClosedFormExamples) {
  Matrix w(2, 2);
  w << 1, 2, 1, 2;
  Vector y(2);
  y << 3, 0;
  const BigM m = ComputeBigM(y, w, UnitBox(2));
  EXPECT_NEAR(m.m(0), 6.0, 1e-12);
  EXPECT_NEAR(m.m(1), 3.0, 1e-12);
}

TEST(ComputeBigM, DominatesSampledResidualsAndIsAttainedAtVertex) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 1 + trial % 3;
    const Matrix w = RandomMatrix(rng, 1, p);
    const Vector y = 3.0 * RandomVector(rng, 1);
    ParameterBox box;
    box.lo = -RandomVector(rng, p).cwiseAbs() - Vector::Constant(p, 0.1);
    box.hi = RandomVector(rng, p).cwiseAbs() + Vector::Constant(p, 0.1);
    const double m = ComputeBigM(y, w, box).m(0);
    for (int k = 0; k < 10000; ++k) {
      Vector t(p);
      for (Eigen::Index j = 0; j < p; ++j) t(j) = box.lo(j) + unif(rng) * (box.hi(j) - box.lo(j));
      EXPECT_LE(std::abs(y(0) - w.row(0).dot(t)), m + 1e-12);
    }
    double vertex_max = 0.0;
    for (int mask = 0; mask < (1 << p); ++mask) {
      Vector t(p);
      for (Eigen::Index j = 0; j < p; ++j) t(j) = (mask >> j) & 1 ? box.hi(j) : box.lo(j);
      vertex_max = std::max(vertex_max, std::abs(y(0) - w.row(0).dot(t)));
    }
    EXPECT_NEAR(vertex_max, m, 1e-12);
  }
}

TEST(BuildProblem, TwoObservationObjective) {
  const MiqpProblem prob = HandProblem();
  const double q = prob.q_hat(0, 0);
  EXPECT_NEAR(q, 4.0, 1e-12);
  for (int e1 = 0; e1 < 2; ++e1) {
    for (int e2 = 0; e2 < 2; ++e2) {
      Vector e(2);
      e << e1, e2;
      EXPECT_NEAR(prob.Objective(e), q * (e1 + e2 - 1.0) * (e1 + e2 - 1.0), 1e-12);
    }
  }
}

TEST(BuildProblem, RowCountsOnSimulatedDesign) {
  const MiqpProblem prob = ivqr::testing::DgpProblem(100, 0.5, 42);
  EXPECT_EQ(prob.n(), 100);
  EXPECT_EQ(prob.p(), 4);
  EXPECT_EQ(prob.ConstraintMatrix().rows(), 200);
  EXPECT_EQ(prob.ConstraintMatrix().cols(), 104);
  EXPECT_EQ(prob.ConstraintRhs().size(), 200);
  EXPECT_EQ(prob.box.dim(), 4);
}

TEST(BuildProblem, AllOnesFeasibleOnlyWhenEveryFitCanReachY) {
  const MiqpProblem prob = HandProblem();
  const std::vector<std::uint8_t> ones{1, 1};
  EXPECT_TRUE(ivqr::testing::SignsFeasible(prob, ones));
  // Shrinking the box below y_2 = 1 makes e = (1, 1) unattainable.
  Vector y(2);
  y << 0, 1;
  const Matrix w = Matrix::Ones(2, 1);
  ParameterBox box;
  box.lo = Vector::Constant(1, -10.0);
  box.hi = Vector::Constant(1, 0.5);
  const MiqpProblem small =
      BuildProblem(y, w, w, QuantileSpec{}, box, prob.q_hat, ComputeBigM(y, w, box));
  EXPECT_FALSE(ivqr::testing::SignsFeasible(small, ones));
  EXPECT_TRUE(ivqr::testing::SignsFeasible(small, {1, 0}));
}

TEST(BuildProblem, StackedRowsMatchPerSignRows) {
  const MiqpProblem prob = ivqr::testing::SmallProblem(8, 2, 3, 0.3, 5);
  const Matrix a = prob.ConstraintMatrix();
  const Vector b = prob.ConstraintRhs();
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> e(8);
    Vector v(8 + 2);
    for (int i = 0; i < 8; ++i) {
      e[static_cast<std::size_t>(i)] = coin(rng);
      v(i) = e[static_cast<std::size_t>(i)];
    }
    v.tail(2) = prob.box.Center() + 0.1 * RandomVector(rng, 2);
    Matrix at;
    Vector bt;
    prob.ThetaRowsForSigns(e, at, bt);
    EXPECT_LT(((a * v - b) - (at * v.tail(2) - bt)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BuildProblem, RejectsInconsistentDimensions) {
  const MiqpProblem prob = HandProblem();
  try {
    BuildProblem(prob.y, prob.w, Matrix::Ones(3, 1), QuantileSpec{}, prob.box, prob.q_hat,
                 prob.big_m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInconsistentDimensions);
  }
}

TEST(HeuristicIncumbent, Examples) {
  const MiqpProblem prob = HandProblem();
  const Incumbent inc = HeuristicIncumbent(prob, Vector::Constant(1, 0.5));
  EXPECT_EQ(inc.e, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_NEAR(inc.objective, 0.0, 1e-15);
  EXPECT_EQ(inc.margin_violations, 0);
  const Incumbent low = HeuristicIncumbent(prob, prob.box.lo);
  EXPECT_EQ(low.e, (std::vector<std::uint8_t>{0, 0}));
  EXPECT_NEAR(low.objective, 4.0, 1e-12);
}

TEST(HeuristicIncumbent, NeverBelowSolverOptimum) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MiqpProblem prob = ivqr::testing::DgpProblem(30, 0.25 * static_cast<double>(1 + seed % 3), seed);
    const BnbResult r = BranchAndBound(prob);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      Vector t(prob.p());
      for (Eigen::Index j = 0; j < prob.p(); ++j) {
        t(j) = prob.box.lo(j) + unif(rng) * (prob.box.hi(j) - prob.box.lo(j));
      }
      EXPECT_GE(HeuristicIncumbent(prob, t).objective, r.objective - 1e-9);
    }
  }
}

// At fixed theta, the heuristic sign vector is feasible for the big-M rows
// whenever no residual falls in (0, margin), and its objective equals the
// GMM objective.
TEST(HeuristicIncumbent, EquivalenceAtFixedTheta) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MiqpProblem prob = ivqr::testing::SmallProblem(12, 2, 3, 0.4, seed);
    for (int k = 0; k < 200; ++k) {
      Vector t(prob.p());
      for (Eigen::Index j = 0; j < prob.p(); ++j) {
        t(j) = prob.box.lo(j) + unif(rng) * (prob.box.hi(j) - prob.box.lo(j));
      }
      const Incumbent inc = HeuristicIncumbent(prob, t);
      ASSERT_EQ(inc.margin_violations, 0);
      EXPECT_LE(prob.Violation(inc.e, t), 1e-9);
      const double direct = GmmObjective(prob.y, prob.w, prob.g, t, prob.tau, prob.q_hat);
      EXPECT_NEAR(inc.objective, direct, 1e-10 * (1.0 + direct));
    }
  }
}
