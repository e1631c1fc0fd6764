// Microbenchmarks for the hot paths: sector enumeration, Hamiltonian
// assembly, stage propagation on both propagator routes, and the two
// transport solvers.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "bosecone/evolve.hpp"
#include "bosecone/fock.hpp"
#include "bosecone/hamiltonian.hpp"
#include "bosecone/harness.hpp"
#include "bosecone/lattice.hpp"
#include "bosecone/transport.hpp"

using namespace bosecone;

namespace {

struct Problem {
  std::shared_ptr<const LatticeGeometry> lattice;
  std::shared_ptr<const FockBasis> basis;
  HamiltonianModel model;
  PureState psi;
};

Problem make_problem(int length, int bosons) {
  Problem p;
  p.lattice = std::make_shared<LatticeGeometry>(LatticeGeometry::hypercubic(1, {length}));
  p.basis = std::make_shared<FockBasis>(FockBasis::enumerate(length, bosons));
  Rng rng(1);
  p.model.lattice = p.lattice;
  p.model.basis = p.basis;
  p.model.hopping = random_hopping(rng, *p.lattice, 1.0, 2.5);
  p.model.interaction = InteractionSpec::bose_hubbard(0.8, 0.1);
  p.psi = random_pure_state(rng, *p.basis);
  return p;
}

}  // namespace

static void BM_BasisEnumeration(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  const int bosons = static_cast<int>(state.range(1));
  for (auto _ : state) {
    FockBasis basis = FockBasis::enumerate(length, bosons);
    benchmark::DoNotOptimize(basis.dim());
  }
  state.SetLabel("dim=" + std::to_string(FockBasis::enumerate(length, bosons).dim()));
}
BENCHMARK(BM_BasisEnumeration)->Args({8, 4})->Args({10, 5})->Args({12, 6});

static void BM_Materialize(benchmark::State& state) {
  Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    SparseHamiltonian h = materialize(p.model);
    benchmark::DoNotOptimize(h.dim());
  }
}
BENCHMARK(BM_Materialize)->Args({6, 3})->Args({8, 4})->Args({10, 5});

static void BM_StageDense(benchmark::State& state) {
  Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  SparseHamiltonian h = materialize(p.model);
  StagePropagator prop(h, /*dense_cutoff=*/1 << 20);
  for (auto _ : state) {
    Eigen::VectorXcd out = prop.at(p.psi.amps, 1.0);
    benchmark::DoNotOptimize(out.norm());
  }
}
BENCHMARK(BM_StageDense)->Args({6, 3})->Args({8, 4});

static void BM_StageKrylov(benchmark::State& state) {
  Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  SparseHamiltonian h = materialize(p.model);
  StagePropagator prop(h, /*dense_cutoff=*/1);
  for (auto _ : state) {
    Eigen::VectorXcd psi = p.psi.amps;
    prop.advance(psi, 1.0);
    benchmark::DoNotOptimize(psi.norm());
  }
}
BENCHMARK(BM_StageKrylov)->Args({6, 3})->Args({8, 4})->Args({10, 5});

static void BM_TransportPrimal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  const auto lattice = LatticeGeometry::hypercubic(1, {n});
  const CostMatrix cost = CostMatrix::power_law(lattice, 0.75);
  Eigen::VectorXd x = random_distribution(rng, n);
  Eigen::VectorXd y = random_distribution(rng, n);
  for (auto _ : state) {
    PrimalSolution sol = wasserstein_primal(x, y, cost);
    benchmark::DoNotOptimize(sol.value);
  }
}
BENCHMARK(BM_TransportPrimal)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

static void BM_TransportDual(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  const auto lattice = LatticeGeometry::hypercubic(1, {n});
  const CostMatrix cost = CostMatrix::power_law(lattice, 0.75);
  Eigen::VectorXd x = random_distribution(rng, n);
  Eigen::VectorXd y = random_distribution(rng, n);
  for (auto _ : state) {
    DualSolution sol = wasserstein_dual(x, y, cost);
    benchmark::DoNotOptimize(sol.value);
  }
}
BENCHMARK(BM_TransportDual)->Arg(8)->Arg(16)->Arg(24);

BENCHMARK_MAIN();
