// Discrete optimal transport: primal network simplex against the independent
// dual LP, closed forms (two-point instances, the 1-D CDF formula), metric
// axioms, plan/potential certificates, and the configuration-space extension.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "bosecone/fock.hpp"
#include "bosecone/harness.hpp"
#include "bosecone/lattice.hpp"
#include "bosecone/transport.hpp"

using namespace bosecone;

namespace {

// W1 on a 1-D chain with exponent 1: integral of |CDF difference|.
double cdf_w1(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double acc = 0.0;
  double running = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    running += x(i) - y(i);
    acc += std::abs(running);
  }
  return acc;
}

}  // namespace

TEST_CASE("chain transport with unit exponent matches the CDF formula", "[transport]") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    Rng sub = rng.spawn(static_cast<std::uint64_t>(trial));
    const int n = sub.uniform_int(2, 12);
    const auto lattice = LatticeGeometry::hypercubic(1, {n});
    const CostMatrix cost = CostMatrix::power_law(lattice, 1.0);
    Eigen::VectorXd x = random_distribution(sub, n);
    Eigen::VectorXd y = random_distribution(sub, n);
    PrimalSolution sol = wasserstein_primal(x, y, cost);
    REQUIRE(sol.value == Catch::Approx(cdf_w1(x, y)).margin(1e-11));
  }
}

TEST_CASE("two-point instances have a closed form", "[transport]") {
  const auto lattice = LatticeGeometry::hypercubic(1, {7});
  for (double expo : {0.4, 1.0}) {
    const CostMatrix cost = CostMatrix::power_law(lattice, expo);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(7);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(7);
    x(1) = 0.25;
    x(2) = 0.75;
    y(1) = 0.10;
    y(6) = 0.90;
    // Mass 0.15 must leave site 1 and 0.75 must leave site 2, all bound for
    // site 6; the split is forced, so the optimum is computable by hand.
    const double expect = 0.15 * std::pow(5.0, expo) + 0.75 * std::pow(4.0, expo);
    PrimalSolution sol = wasserstein_primal(x, y, cost);
    REQUIRE(sol.value == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("primal and dual solvers agree across random instances", "[transport]") {
  Rng rng(102);
  for (int trial = 0; trial < 60; ++trial) {
    Rng sub = rng.spawn(static_cast<std::uint64_t>(trial));
    OtInstance inst = random_ot_instance(sub, 2, 14, sub.uniform(0.3, 1.0));
    PrimalSolution p = wasserstein_primal(inst.x, inst.y, inst.cost);
    DualSolution d = wasserstein_dual(inst.x, inst.y, inst.cost);
    REQUIRE(std::abs(p.value - d.value) <= 1e-9 * std::max(1.0, p.value));
    REQUIRE(duality_gap(inst.x, inst.y, inst.cost) <= 1e-9 * std::max(1.0, p.value));
  }
}

TEST_CASE("transport distance satisfies the metric axioms", "[transport]") {
  Rng rng(103);
  const int n = 6;
  const auto lattice = LatticeGeometry::hypercubic(2, {2, 3});
  const CostMatrix cost = CostMatrix::power_law(lattice, 0.7);

  for (int trial = 0; trial < 20; ++trial) {
    Rng sub = rng.spawn(static_cast<std::uint64_t>(trial));
    Eigen::VectorXd x = random_distribution(sub, n);
    Eigen::VectorXd y = random_distribution(sub, n);
    Eigen::VectorXd z = random_distribution(sub, n);
    const double wxy = wasserstein_primal(x, y, cost).value;
    const double wyx = wasserstein_primal(y, x, cost).value;
    const double wxz = wasserstein_primal(x, z, cost).value;
    const double wzy = wasserstein_primal(z, y, cost).value;
    REQUIRE(wxy == Catch::Approx(wyx).margin(1e-11));               // symmetry
    REQUIRE(wasserstein_primal(x, x, cost).value <= 1e-12);         // identity
    REQUIRE(wxy <= wxz + wzy + 1e-10);                              // triangle
    REQUIRE(wxy >= 0.0);
  }
}

TEST_CASE("scaling the cost scales the distance", "[transport]") {
  Rng rng(104);
  const auto lattice = LatticeGeometry::hypercubic(1, {8});
  Eigen::VectorXd x = random_distribution(rng, 8);
  Eigen::VectorXd y = random_distribution(rng, 8);

  const CostMatrix base = CostMatrix::power_law(lattice, 0.5);
  const double w_base = wasserstein_primal(x, y, base).value;

  const double lam = 3.5;
  const CostMatrix scaled = CostMatrix::from_table(lam * base.table(), true);
  const double w_scaled = wasserstein_primal(x, y, scaled).value;
  REQUIRE(w_scaled == Catch::Approx(lam * w_base).epsilon(1e-12));
}

TEST_CASE("optimal plans and potentials certify the value", "[transport]") {
  Rng rng(105);
  for (int trial = 0; trial < 25; ++trial) {
    Rng sub = rng.spawn(static_cast<std::uint64_t>(trial));
    OtInstance inst = random_ot_instance(sub, 3, 10, sub.uniform(0.3, 1.0));
    const Eigen::Index n = inst.x.size();

    PrimalSolution p = wasserstein_primal(inst.x, inst.y, inst.cost);
    SECTION("plan marginals and cost resum") {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
      double paid = 0.0;
      for (const PlanEntry& e : p.plan) {
        REQUIRE(e.mass >= -1e-12);
        row(e.from) += e.mass;
        col(e.to) += e.mass;
        paid += e.mass * inst.cost(e.from, e.to);
      }
      REQUIRE((row - inst.x).cwiseAbs().maxCoeff() <= 1e-10);
      REQUIRE((col - inst.y).cwiseAbs().maxCoeff() <= 1e-10);
      REQUIRE(paid == Catch::Approx(p.value).margin(1e-10));
    }

    SECTION("dual potential is feasible and attains the value") {
      DualSolution d = wasserstein_dual(inst.x, inst.y, inst.cost);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          REQUIRE(std::abs(d.potential(i) - d.potential(j)) <=
                  inst.cost(i, j) + 1e-12);
      REQUIRE(d.potential.dot(inst.x - inst.y) == Catch::Approx(d.value).margin(1e-10));
    }
  }
}

TEST_CASE("random feasible potentials never beat the optimum", "[transport]") {
  // Weak duality, checked against potentials made feasible by shrinking.
  Rng rng(106);
  OtInstance inst = random_ot_instance(rng, 6, 10, 0.8);
  const Eigen::Index n = inst.x.size();
  const double best = wasserstein_primal(inst.x, inst.y, inst.cost).value;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd phi(n);
    for (Eigen::Index i = 0; i < n; ++i) phi(i) = rng.uniform(-1.0, 1.0);
    double worst = 1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) worst = std::max(worst, std::abs(phi(i) - phi(j)) / inst.cost(i, j));
    phi /= worst;  // now |phi_i - phi_j| <= c_ij everywhere
    REQUIRE(phi.dot(inst.x - inst.y) <= best + 1e-10);
  }
}

TEST_CASE("transport rejects malformed marginals", "[transport]") {
  const auto lattice = LatticeGeometry::hypercubic(1, {3});
  const CostMatrix cost = CostMatrix::power_law(lattice, 1.0);
  Eigen::VectorXd x(3), y(3);
  x << 0.5, 0.3, 0.2;
  y << 0.5, 0.5, 0.2;  // mass mismatch
  REQUIRE_THROWS_AS(wasserstein_primal(x, y, cost), ValidationError);
  REQUIRE_THROWS_AS(wasserstein_dual(x, y, cost), ValidationError);

  y << 0.9, 0.3, -0.2;  // negative entry
  REQUIRE_THROWS_AS(wasserstein_primal(x, y, cost), ValidationError);

  Eigen::VectorXd short_x(2);
  short_x << 0.5, 0.5;
  REQUIRE_THROWS_AS(wasserstein_primal(short_x, y, cost), ValidationError);

  // The dense dual tableau is size-capped.
  const auto big = LatticeGeometry::hypercubic(1, {60});
  const CostMatrix big_cost = CostMatrix::power_law(big, 1.0);
  Eigen::VectorXd bx = Eigen::VectorXd::Constant(60, 1.0 / 60.0);
  Eigen::VectorXd by = bx;
  REQUIRE_THROWS_AS(wasserstein_dual(bx, by, big_cost, 48), ValidationError);
}

TEST_CASE("region transfer lower bound follows its formula", "[transport]") {
  const auto lattice = LatticeGeometry::hypercubic(1, {6});
  const Region x_region{0, 1};
  const Region y_region{5};
  const double alpha_eps = 0.8;

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
  Eigen::VectorXd xt = Eigen::VectorXd::Zero(6);
  x0(0) = 0.6;
  x0(2) = 0.4;            // 0.4 sits outside X at t=0
  xt(5) = 0.7;
  xt(1) = 0.3;
  // mu = y-mass at the end minus what the complement of X could already hold:
  // 0.7 - 0.4 = 0.3, moved at least d(X, Y) = 4 sites.
  const double expect = 0.3 * std::pow(4.0, alpha_eps);
  REQUIRE(region_transfer_lower_bound(x0, xt, x_region, y_region, lattice, alpha_eps) ==
          Catch::Approx(expect).epsilon(1e-12));

  // No newly arriving mass: the bound collapses to zero.
  Eigen::VectorXd already = Eigen::VectorXd::Zero(6);
  already(5) = 1.0;
  REQUIRE(region_transfer_lower_bound(already, xt, x_region, y_region, lattice, alpha_eps) ==
          0.0);

  // And the transport distance can never undercut it.
  const CostMatrix cost = CostMatrix::power_law(lattice, alpha_eps);
  const double w = wasserstein_primal(x0, xt, cost).value;
  REQUIRE(w + 1e-12 >= expect);
}

TEST_CASE("configuration-space costs extend the site metric", "[transport]") {
  const auto lattice = LatticeGeometry::hypercubic(1, {4});
  const FockBasis basis = FockBasis::enumerate(4, 2);
  const double alpha_eps = 1.0;

  SECTION("single-boson moves cost exactly the site metric") {
    const std::size_t a = basis.index_of({1, 1, 0, 0});
    const std::size_t b = basis.index_of({1, 0, 0, 1});
    ConfigCost c = config_cost(basis, a, b, lattice, alpha_eps);
    REQUIRE(c.exact);
    REQUIRE(c.value == Catch::Approx(2.0).epsilon(1e-12));  // one boson moved two sites
  }

  SECTION("moving both bosons adds costs") {
    const std::size_t a = basis.index_of({2, 0, 0, 0});
    const std::size_t b = basis.index_of({0, 0, 0, 2});
    ConfigCost c = config_cost(basis, a, b, lattice, alpha_eps);
    REQUIRE(c.exact);
    REQUIRE(c.value == Catch::Approx(6.0).epsilon(1e-12));  // two bosons, three sites each
  }

  SECTION("the dense table is a pseudometric and feeds the solver") {
    Eigen::MatrixXd table = config_cost_matrix(basis, lattice, alpha_eps);
    REQUIRE(table.rows() == static_cast<Eigen::Index>(basis.dim()));
    REQUIRE((table - table.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(table.diagonal().cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
      for (Eigen::Index j = 0; j < table.rows(); ++j)
        for (Eigen::Index k = 0; k < table.rows(); ++k)
          REQUIRE(table(i, j) <= table(i, k) + table(k, j) + 1e-10);

    // Point masses on configurations reduce to the table entry.
    Rng rng(107);
    for (int trial = 0; trial < 5; ++trial) {
      const auto i = static_cast<Eigen::Index>(rng.uniform_int(0, static_cast<int>(basis.dim()) - 1));
      const auto j = static_cast<Eigen::Index>(rng.uniform_int(0, static_cast<int>(basis.dim()) - 1));
      Eigen::VectorXd p = Eigen::VectorXd::Zero(table.rows());
      Eigen::VectorXd q = Eigen::VectorXd::Zero(table.rows());
      p(i) = 1.0;
      q(j) = 1.0;
      REQUIRE(wasserstein_configs(p, q, table) == Catch::Approx(table(i, j)).margin(1e-11));
    }
  }
}
