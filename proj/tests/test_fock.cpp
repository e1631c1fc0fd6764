#include <cmath>
#include <complex>
#include <numeric>

#include <catch2/catch_amalgamated.hpp>

#include "bosecone/fock.hpp"
#include "bosecone/harness.hpp"

using namespace bosecone;

namespace {

// independent combinatorial oracle for the sector dimension
std::size_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("sector dimension matches the stars-and-bars count", "[fock]") {
  for (int sites : {1, 2, 3, 5, 6})
    for (int bosons : {0, 1, 2, 3, 4}) {
      FockBasis basis = FockBasis::enumerate(sites, bosons);
      REQUIRE(basis.dim() == binom(bosons + sites - 1, bosons));
    }
  REQUIRE_THROWS_AS(FockBasis::enumerate(0, 2), ValidationError);
  REQUIRE_THROWS_AS(FockBasis::enumerate(3, -1), ValidationError);
  REQUIRE_THROWS_AS(FockBasis::enumerate(40, 20, 1000), ValidationError);  // cap
}

TEST_CASE("configurations are descending-lex ordered and round-trip", "[fock]") {
  FockBasis basis = FockBasis::enumerate(4, 3);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const Configuration& c = basis.config(i);
    REQUIRE(std::accumulate(c.begin(), c.end(), 0) == 3);
    REQUIRE(basis.index_of(c) == i);
    if (i + 1 < basis.dim()) REQUIRE(c > basis.config(i + 1));  // descending lex
  }
  REQUIRE(basis.config(0) == Configuration{3, 0, 0, 0});
  REQUIRE(basis.config(basis.dim() - 1) == Configuration{0, 0, 0, 3});
  REQUIRE_THROWS_AS(basis.index_of(Configuration{2, 0, 0, 0}), ValidationError);
  REQUIRE_THROWS_AS(basis.index_of(Configuration{4, -1, 0, 0}), ValidationError);
  REQUIRE_THROWS_AS(basis.index_of(Configuration{3, 0, 0}), ValidationError);
}

TEST_CASE("hop neighbors: factors and involution", "[fock]") {
  FockBasis basis = FockBasis::enumerate(4, 3);
  for (std::size_t idx = 0; idx < basis.dim(); ++idx) {
    const Configuration& c = basis.config(idx);
    for (const Hop& h : hop_neighbors(basis, idx)) {
      REQUIRE(h.from != h.to);
      REQUIRE(c[static_cast<std::size_t>(h.from)] > 0);
      // amplitude formula evaluated at the source occupations
      double expect = std::sqrt(double(c[static_cast<std::size_t>(h.from)]) *
                                (c[static_cast<std::size_t>(h.to)] + 1));
      REQUIRE(h.amp == Catch::Approx(expect).margin(1e-14));
      REQUIRE(h.pair_total ==
              c[static_cast<std::size_t>(h.from)] + c[static_cast<std::size_t>(h.to)]);
      // the reverse hop exists with the same factor and pair total
      bool found = false;
      for (const Hop& back : hop_neighbors(basis, h.target)) {
        if (back.target == idx && back.from == h.to && back.to == h.from) {
          REQUIRE(back.amp == Catch::Approx(h.amp).margin(1e-14));
          REQUIRE(back.pair_total == h.pair_total);
          found = true;
        }
      }
      REQUIRE(found);
    }
  }
}

TEST_CASE("hop neighbor count matches direct enumeration", "[fock]") {
  FockBasis basis = FockBasis::enumerate(3, 2);
  for (std::size_t idx = 0; idx < basis.dim(); ++idx) {
    const Configuration& c = basis.config(idx);
    int occupied = 0;
    for (int n : c)
      if (n > 0) ++occupied;
    REQUIRE(hop_neighbors(basis, idx).size() ==
            static_cast<std::size_t>(occupied) * (c.size() - 1));
  }
}

TEST_CASE("region number and projector weights", "[fock]") {
  FockBasis basis = FockBasis::enumerate(4, 3);
  Region x{0, 2};
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const Configuration& c = basis.config(i);
    REQUIRE(region_number(c, x) == c[0] + c[2]);
    PureState psi = PureState::basis_state(basis, c);
    int n = region_number(c, x);
    for (int n0 = 0; n0 <= 3; ++n0) {
      REQUIRE(projector_weight(psi, basis, x, NumberPredicate::AtMost, n0) ==
              Catch::Approx(n <= n0 ? 1.0 : 0.0).margin(1e-14));
      REQUIRE(projector_weight(psi, basis, x, NumberPredicate::AtLeast, n0) ==
              Catch::Approx(n >= n0 ? 1.0 : 0.0).margin(1e-14));
    }
  }
  // total-number ceiling: any state has weight 1 on n_X <= N for X the whole
  // lattice
  Rng rng(21);
  PureState any = random_pure_state(rng, basis);
  REQUIRE(projector_weight(any, basis, Region{0, 1, 2, 3}, NumberPredicate::AtMost, 3) ==
          Catch::Approx(1.0).margin(1e-12));
  REQUIRE(projector_weight(any, basis, x, NumberPredicate::AtMost, 3) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("concentrations sum to one and match basis occupations", "[fock]") {
  FockBasis basis = FockBasis::enumerate(5, 4);
  Rng rng(33);
  for (int rep = 0; rep < 10; ++rep) {
    PureState psi = random_pure_state(rng, basis);
    Eigen::VectorXd x = concentrations(psi, basis);
    REQUIRE(x.minCoeff() >= 0.0);
    REQUIRE(x.sum() == Catch::Approx(1.0).margin(1e-12));
  }
  Configuration c{2, 0, 1, 1, 0};
  Eigen::VectorXd x = concentrations(PureState::basis_state(basis, c), basis);
  for (int s = 0; s < 5; ++s)
    REQUIRE(x(s) == Catch::Approx(c[static_cast<std::size_t>(s)] / 4.0).margin(1e-14));
}

TEST_CASE("state variants agree on linear observables", "[fock]") {
  FockBasis basis = FockBasis::enumerate(3, 2);
  Rng rng(55);
  PureState a = random_pure_state(rng, basis);
  PureState b = random_pure_state(rng, basis);
  StateEnsemble ens{{0.3, 0.7}, {a, b}};
  DensityMatrix rho = DensityMatrix::from_ensemble(ens);
  REQUIRE(rho.trace_defect() <= 1e-12);

  Eigen::VectorXd xe = concentrations(ens, basis);
  Eigen::VectorXd xr = concentrations(rho, basis);
  Eigen::VectorXd xmix = 0.3 * concentrations(a, basis) + 0.7 * concentrations(b, basis);
  REQUIRE((xe - xmix).cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE((xr - xmix).cwiseAbs().maxCoeff() <= 1e-12);

  Region reg{0};
  for (int n0 = 0; n0 <= 2; ++n0) {
    double we = projector_weight(ens, basis, reg, NumberPredicate::AtLeast, n0);
    double wr = projector_weight(rho, basis, reg, NumberPredicate::AtLeast, n0);
    double wmix = 0.3 * projector_weight(a, basis, reg, NumberPredicate::AtLeast, n0) +
                  0.7 * projector_weight(b, basis, reg, NumberPredicate::AtLeast, n0);
    REQUIRE(we == Catch::Approx(wmix).margin(1e-12));
    REQUIRE(wr == Catch::Approx(wmix).margin(1e-12));
  }

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::complex<double> ce = coherence(ens, basis, i, j);
      std::complex<double> cr = coherence(rho, basis, i, j);
      std::complex<double> cmix =
          0.3 * coherence(a, basis, i, j) + 0.7 * coherence(b, basis, i, j);
      REQUIRE(std::abs(ce - cmix) <= 1e-12);
      REQUIRE(std::abs(cr - cmix) <= 1e-12);
    }
}

TEST_CASE("coherence is hermitian and counts occupation on the diagonal", "[fock]") {
  FockBasis basis = FockBasis::enumerate(4, 3);
  Rng rng(77);
  PureState psi = random_pure_state(rng, basis);
  Eigen::VectorXd x = concentrations(psi, basis);
  for (int i = 0; i < 4; ++i) {
    // <b_i^dag b_i> = <n_i> = N x_i
    REQUIRE(coherence(psi, basis, i, i).real() == Catch::Approx(3.0 * x(i)).margin(1e-12));
    REQUIRE(std::abs(coherence(psi, basis, i, i).imag()) <= 1e-14);
    for (int j = 0; j < 4; ++j)
      REQUIRE(std::abs(coherence(psi, basis, i, j) -
                       std::conj(coherence(psi, basis, j, i))) <= 1e-12);
  }
}

TEST_CASE("fidelity helpers", "[fock]") {
  FockBasis basis = FockBasis::enumerate(3, 2);
  Configuration c{1, 1, 0};
  PureState psi = PureState::basis_state(basis, c);
  REQUIRE(fidelity_to_config(psi, basis, c) == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(fidelity_to_config(psi, basis, Configuration{2, 0, 0}) ==
          Catch::Approx(0.0).margin(1e-15));
  REQUIRE(fidelity(psi, psi) == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(config_probability(psi, basis.index_of(c)) == Catch::Approx(1.0).margin(1e-15));

  StateEnsemble ens{{0.4, 0.6},
                    {psi, PureState::basis_state(basis, Configuration{0, 1, 1})}};
  REQUIRE(fidelity_to_config(ens, basis, c) == Catch::Approx(0.4).margin(1e-12));
  DensityMatrix rho = DensityMatrix::from_ensemble(ens);
  REQUIRE(fidelity_to_config(rho, basis, c) == Catch::Approx(0.4).margin(1e-12));
}
