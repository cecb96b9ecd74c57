#include <benchmark/benchmark.h>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ivqr/gmm.hpp"
#include "ivqr/miqp.hpp"
#include "ivqr/qp.hpp"
#include "ivqr/simulation.hpp"
#include "ivqr/tsls.hpp"

namespace {

using namespace ivqr;

MiqpProblem SimulatedProblem(Eigen::Index n, double tau, std::uint64_t seed) {
  sim::DgpConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  const Dataset ds = sim::Generate(cfg);
  const InstrumentSet inst = DefaultInstruments(ds);
  QuantileSpec spec;
  spec.tau = tau;
  const ParameterBox box = BuildParameterBox(FitTsls(ds, inst), spec.box_scale);
  return BuildProblem(ds, inst, spec, box, WeightMatrix(inst, tau));
}

// Full solve on one draw of the simulation design; args: n, 100 * tau.
void BM_BranchAndBound(benchmark::State& state) {
  const MiqpProblem prob =
      SimulatedProblem(state.range(0), static_cast<double>(state.range(1)) / 100.0, 42);
  std::int64_t nodes = 0;
  for (auto _ : state) {
    const BnbResult r = BranchAndBound(prob);
    nodes = r.nodes_explored;
    benchmark::DoNotOptimize(r.objective);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_BranchAndBound)
    ->Args({50, 50})
    ->Args({100, 25})
    ->Args({100, 50})
    ->Args({100, 75})
    ->Unit(benchmark::kMillisecond);

void BM_NodeRelaxationRoot(benchmark::State& state) {
  const MiqpProblem prob = SimulatedProblem(state.range(0), 0.5, 7);
  const std::vector<std::int8_t> status(static_cast<std::size_t>(prob.n()), 0);
  for (auto _ : state) {
    const RelaxationBound rb =
        SolveNodeRelaxation(prob, status, Vector(), std::numeric_limits<double>::infinity());
    benchmark::DoNotOptimize(rb.lower_bound);
  }
}
BENCHMARK(BM_NodeRelaxationRoot)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

// Dense QP with a random PSD Hessian and random rows; arg: variables.
void BM_SolveQp(benchmark::State& state) {
  const Eigen::Index nv = state.range(0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Matrix b(nv, nv), a(2 * nv, nv);
  for (Eigen::Index i = 0; i < nv; ++i)
    for (Eigen::Index j = 0; j < nv; ++j) b(i, j) = nd(rng);
  for (Eigen::Index i = 0; i < 2 * nv; ++i)
    for (Eigen::Index j = 0; j < nv; ++j) a(i, j) = nd(rng);
  QpProblem p = MakeQp(b * b.transpose(), Vector::Ones(nv));
  p.A = a;
  p.b = Vector::Ones(2 * nv);
  p.lower = Vector::Constant(nv, -5.0);
  p.upper = Vector::Constant(nv, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(SolveQp(p).objective);
}
BENCHMARK(BM_SolveQp)->Arg(4)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_FeasibilityPhase1(benchmark::State& state) {
  const MiqpProblem prob = SimulatedProblem(state.range(0), 0.5, 11);
  const Incumbent inc = HeuristicIncumbent(prob, prob.box.Center());
  Matrix a;
  Vector b;
  prob.ThetaRowsForSigns(inc.e, a, b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(FeasibilityPhase1(a, b, prob.box.lo, prob.box.hi).feasible);
  }
}
BENCHMARK(BM_FeasibilityPhase1)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_OracleEnumerate(benchmark::State& state) {
  QuantileSpec spec;
  const sim::SmallInstance si = sim::RandomSmallInstance(state.range(0), 2, 3, 5);
  const ParameterBox box = BuildParameterBox(FitTsls(si.ds, si.inst), spec.box_scale);
  const MiqpProblem prob = BuildProblem(si.ds, si.inst, spec, box, WeightMatrix(si.inst, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(OracleEnumerate(prob).objective);
}
BENCHMARK(BM_OracleEnumerate)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
