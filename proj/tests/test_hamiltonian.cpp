// Hamiltonian assembly: hermiticity, hop/tunneling matrix elements, diagonal
// interaction evaluation, decay certificates, and the exact correspondence of
// the assisted two-site ladder with the integer-spectrum tridiagonal family.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "bosecone/fock.hpp"
#include "bosecone/hamiltonian.hpp"
#include "bosecone/harness.hpp"
#include "bosecone/kac.hpp"
#include "bosecone/lattice.hpp"

using namespace bosecone;

namespace {

HamiltonianModel chain_model(int length, int bosons, HoppingSpec hop, InteractionSpec inter) {
  HamiltonianModel model;
  model.lattice = std::make_shared<LatticeGeometry>(LatticeGeometry::hypercubic(1, {length}));
  model.basis = std::make_shared<FockBasis>(FockBasis::enumerate(length, bosons));
  model.hopping = std::move(hop);
  model.interaction = std::move(inter);
  return model;
}

}  // namespace

TEST_CASE("materialized matrices are exactly symmetric", "[hamiltonian]") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Rng sub = rng.spawn(static_cast<std::uint64_t>(trial));
    const int length = sub.uniform_int(2, 6);
    const int bosons = sub.uniform_int(1, 3);
    auto lattice = std::make_shared<LatticeGeometry>(LatticeGeometry::hypercubic(1, {length}));
    HamiltonianModel model;
    model.lattice = lattice;
    model.basis = std::make_shared<FockBasis>(FockBasis::enumerate(length, bosons));
    model.hopping = random_hopping(sub, *lattice, sub.uniform(0.1, 2.0), sub.uniform(1.5, 4.0));
    model.interaction = InteractionSpec::bose_hubbard(sub.uniform(0.0, 3.0), sub.uniform(-1.0, 1.0));
    if (trial % 2 == 0 && length >= 2)
      model.tunneling = TunnelingSpec::pair(*lattice, 0, 1, sub.uniform(0.1, 1.0));
    SparseHamiltonian h = materialize(model);
    REQUIRE(h.hermiticity_defect() <= 1e-12);
  }
}

TEST_CASE("off-diagonal entries connect configurations one hop apart", "[hamiltonian]") {
  auto model = chain_model(4, 3, HoppingSpec::power_law(LatticeGeometry::hypercubic(1, {4}), 1.0, 2.5),
                           InteractionSpec::bose_hubbard(0.7, 0.2));
  SparseHamiltonian h = materialize(model);
  const FockBasis& basis = *model.basis;
  Eigen::MatrixXd dense = h.dense();
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    for (std::size_t b = 0; b < basis.dim(); ++b) {
      if (a == b || dense(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == 0.0)
        continue;
      const Configuration& ca = basis.config(a);
      const Configuration& cb = basis.config(b);
      int plus = 0, minus = 0, other = 0;
      for (std::size_t s = 0; s < ca.size(); ++s) {
        const int d = cb[s] - ca[s];
        if (d == 1)
          ++plus;
        else if (d == -1)
          ++minus;
        else if (d != 0)
          ++other;
      }
      INFO("rows " << a << " -> " << b);
      REQUIRE(plus == 1);
      REQUIRE(minus == 1);
      REQUIRE(other == 0);
    }
  }
}

TEST_CASE("hop elements carry the bosonic enhancement factor", "[hamiltonian]") {
  // Single active pair, so every off-diagonal entry is J sqrt(n_from (n_to+1)).
  const auto lattice = LatticeGeometry::hypercubic(1, {3});
  const double j = 0.8;
  auto model = chain_model(3, 4, HoppingSpec::pair(lattice, 0, 2, j, 1.5), InteractionSpec::none());
  SparseHamiltonian h = materialize(model);
  const FockBasis& basis = *model.basis;
  Eigen::MatrixXd dense = h.dense();
  int touched = 0;
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const Configuration& ca = basis.config(a);
    if (ca[0] == 0) continue;  // need a boson on site 0 to hop 0 -> 2
    Configuration cb = ca;
    cb[0] -= 1;
    cb[2] += 1;
    const std::size_t b = basis.index_of(cb);
    const double expected = j * std::sqrt(static_cast<double>(ca[0]) * (ca[2] + 1));
    REQUIRE(dense(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) ==
            Catch::Approx(expected).epsilon(1e-14));
    ++touched;
  }
  REQUIRE(touched > 0);
  // Pairs not listed in the spec stay zero: site 1 never exchanges bosons.
  for (std::size_t a = 0; a < basis.dim(); ++a)
    for (std::size_t b = 0; b < basis.dim(); ++b) {
      if (a == b) continue;
      if (basis.config(a)[1] != basis.config(b)[1])
        REQUIRE(dense(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == 0.0);
    }
}

TEST_CASE("assisted tunneling elements include the density factor", "[hamiltonian]") {
  const auto lattice = LatticeGeometry::hypercubic(1, {2});
  const double t = 0.6;
  HamiltonianModel model;
  model.lattice = std::make_shared<LatticeGeometry>(lattice);
  model.basis = std::make_shared<FockBasis>(FockBasis::enumerate(2, 5));
  model.hopping = HoppingSpec::none(lattice);
  model.interaction = InteractionSpec::none();
  model.tunneling = TunnelingSpec::pair(lattice, 0, 1, t);
  SparseHamiltonian h = materialize(model);
  const FockBasis& basis = *model.basis;
  Eigen::MatrixXd dense = h.dense();
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const Configuration& ca = basis.config(a);
    if (ca[0] == 0) continue;
    Configuration cb = ca;
    cb[0] -= 1;
    cb[1] += 1;
    const std::size_t b = basis.index_of(cb);
    const double expected =
        t * (ca[0] + ca[1] - 1) * std::sqrt(static_cast<double>(ca[0]) * (ca[1] + 1));
    REQUIRE(dense(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) ==
            Catch::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("two-site hop plus equal assisted tunneling is the scaled tridiagonal band",
          "[hamiltonian]") {
  // With both terms active at strength J on two sites holding M bosons, the
  // off-diagonal element from |m, M-m> is
  //   J sqrt(...) + J (M-1) sqrt(...) = J M sqrt(m (M-m+1)),
  // i.e. exactly J M times the symmetric tridiagonal family member.
  const auto lattice = LatticeGeometry::hypercubic(1, {2});
  for (int m = 1; m <= 8; ++m) {
    for (double j : {0.5, 2.0}) {
      HamiltonianModel model;
      model.lattice = std::make_shared<LatticeGeometry>(lattice);
      model.basis = std::make_shared<FockBasis>(FockBasis::enumerate(2, m));
      model.hopping = HoppingSpec::pair(lattice, 0, 1, j, 1.5);
      model.interaction = InteractionSpec::none();
      model.tunneling = TunnelingSpec::pair(lattice, 0, 1, j);
      Eigen::MatrixXd dense = materialize(model).dense();
      KacSystem sys = make_kac_system(m);
      // Fock index i holds (M-i, i); ladder index m in the two-site family
      // counts bosons the same way, so the matrices match entrywise.
      REQUIRE((dense - j * m * sys.symmetric).cwiseAbs().maxCoeff() <= 1e-12 * j * m);
    }
  }
}

TEST_CASE("diagonal interaction matches its configuration formula", "[hamiltonian]") {
  const double u = 1.3;
  const double mu = 0.4;
  auto model = chain_model(4, 3, HoppingSpec::none(LatticeGeometry::hypercubic(1, {4})),
                           InteractionSpec::bose_hubbard(u, mu));
  SparseHamiltonian h = materialize(model);
  const FockBasis& basis = *model.basis;
  Eigen::MatrixXd dense = h.dense();
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const Configuration& c = basis.config(a);
    double expect = 0.0;
    for (int n : c) expect += 0.5 * u * n * (n - 1) - mu * n;
    REQUIRE(dense(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) ==
            Catch::Approx(expect).margin(1e-14));
  }

  SECTION("on-site term and sums compose additively") {
    auto combo = InteractionSpec::sum(InteractionSpec::on_site(1, 2.0, -0.5),
                                      InteractionSpec::bose_hubbard(u, mu));
    auto model2 = chain_model(4, 3, HoppingSpec::none(LatticeGeometry::hypercubic(1, {4})),
                              std::move(combo));
    Eigen::MatrixXd dense2 = materialize(model2).dense();
    for (std::size_t a = 0; a < basis.dim(); ++a) {
      const Configuration& c = basis.config(a);
      double expect = 2.0 * c[1] * c[1] - 0.5 * c[1];
      for (int n : c) expect += 0.5 * u * n * (n - 1) - mu * n;
      REQUIRE(dense2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) ==
              Catch::Approx(expect).margin(1e-13));
    }
  }
}

TEST_CASE("quadratic-form expectation agrees with the sparse apply", "[hamiltonian]") {
  Rng rng(77);
  auto lattice = std::make_shared<LatticeGeometry>(LatticeGeometry::hypercubic(2, {2, 3}));
  HamiltonianModel model;
  model.lattice = lattice;
  model.basis = std::make_shared<FockBasis>(FockBasis::enumerate(6, 2));
  model.hopping = random_hopping(rng, *lattice, 1.0, 2.5);
  model.interaction = InteractionSpec::bose_hubbard(0.9, 0.1);
  SparseHamiltonian h = materialize(model);
  Eigen::MatrixXd dense = h.dense();
  for (int trial = 0; trial < 10; ++trial) {
    PureState psi = random_pure_state(rng, *model.basis);
    Eigen::VectorXcd out;
    h.apply(psi.amps, out);
    const std::complex<double> via_apply = psi.amps.dot(out);
    const std::complex<double> via_dense = psi.amps.dot(dense * psi.amps);
    REQUIRE(std::abs(via_apply - via_dense) <= 1e-12);
    REQUIRE(std::abs(via_apply.imag()) <= 1e-12);  // Hermitian expectation is real
  }
}

TEST_CASE("decay certificates accept saturating and reject violating couplings",
          "[hamiltonian]") {
  const auto lattice = LatticeGeometry::hypercubic(1, {5});

  SECTION("power-law couplings saturate their own certificate") {
    auto model = chain_model(5, 2, HoppingSpec::power_law(lattice, 1.2, 3.0),
                             InteractionSpec::none());
    REQUIRE(verify_hopping_decay(model));
    REQUIRE(hopping_decay_excess(model) <= 0.0);
  }

  SECTION("random draws stay certified") {
    Rng rng(5150);
    for (int trial = 0; trial < 25; ++trial) {
      Rng sub = rng.spawn(static_cast<std::uint64_t>(trial));
      auto model = chain_model(5, 2, random_hopping(sub, lattice, 0.9, 2.2),
                               InteractionSpec::none());
      REQUIRE(verify_hopping_decay(model));
    }
  }

  SECTION("an overweight long bond is rejected and blocks assembly") {
    HoppingSpec hop = HoppingSpec::power_law(lattice, 1.0, 3.0);
    hop.amplitude(0, 4) = hop.amplitude(4, 0) = 0.5;  // exceeds 1/4^3
    auto model = chain_model(5, 2, std::move(hop), InteractionSpec::none());
    REQUIRE_FALSE(verify_hopping_decay(model));
    REQUIRE(hopping_decay_excess(model) == Catch::Approx(0.5 - std::pow(4.0, -3.0)));
    REQUIRE_THROWS_AS(materialize(model), ValidationError);
  }

  SECTION("a model without a certificate cannot be decay-checked") {
    HoppingSpec hop = HoppingSpec::power_law(lattice, 1.0, 3.0);
    hop.decay.reset();
    auto model = chain_model(5, 2, std::move(hop), InteractionSpec::none());
    REQUIRE_THROWS_AS(verify_hopping_decay(model), ValidationError);
  }
}

TEST_CASE("constructor validation rejects malformed specs", "[hamiltonian]") {
  const auto chain = LatticeGeometry::hypercubic(1, {4});
  const auto plane = LatticeGeometry::hypercubic(2, {2, 2});

  REQUIRE_THROWS_AS(HoppingSpec::power_law(chain, -1.0, 2.0), ValidationError);
  REQUIRE_THROWS_AS(HoppingSpec::power_law(chain, 1.0, 1.0), ValidationError);  // alpha <= D
  REQUIRE_THROWS_AS(HoppingSpec::pair(chain, 0, 0, 1.0, 2.0), ValidationError);
  REQUIRE_THROWS_AS(HoppingSpec::pair(chain, 0, 9, 1.0, 2.0), ValidationError);
  // On-site terms validate against the configuration they are evaluated on.
  REQUIRE_THROWS_AS(InteractionSpec::on_site(11, 1.0, 0.0).energy(Configuration{1, 1}),
                    ValidationError);

  REQUIRE_THROWS_AS(TunnelingSpec::pair(plane, 0, 1, 1.0), ValidationError);  // not 1-D
  REQUIRE_THROWS_AS(TunnelingSpec::pair(chain, 0, 2, 1.0), ValidationError);  // not adjacent
  REQUIRE_THROWS_AS(TunnelingSpec::pair(chain, 1, 1, 1.0), ValidationError);

  SECTION("materialize cross-checks sector consistency") {
    HamiltonianModel model;
    model.lattice = std::make_shared<LatticeGeometry>(chain);
    model.basis = std::make_shared<FockBasis>(FockBasis::enumerate(3, 2));  // wrong site count
    model.hopping = HoppingSpec::none(chain);
    model.interaction = InteractionSpec::none();
    REQUIRE_THROWS_AS(materialize(model), ValidationError);
  }
}
