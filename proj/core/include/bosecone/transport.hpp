#pragma once

#include <vector>

#include "bosecone/fock.hpp"
#include "bosecone/lattice.hpp"

namespace bosecone {

/// Coupling entry: `mass` moved from source point `from` (marginal x) to
/// destination point `to` (marginal y).
struct PlanEntry {
  int to = 0;
  int from = 0;
  double mass = 0.0;
};

struct PrimalSolution {
  double value = 0.0;
  std::vector<PlanEntry> plan;  ///< basic cells of the optimal coupling
};

struct DualSolution {
  double value = 0.0;
  Eigen::VectorXd potential;  ///< phi with |phi_i - phi_j| <= c_ij
};

/// W(x, y) under cost c by the transportation (network) simplex:
/// north-west-corner start, spanning-tree duals, most-negative entering rule
/// with an automatic switch to Bland's rule, and a final reduced-cost
/// optimality certificate.  x and y must be entrywise >= 0 with equal sums
/// (within 1e-10).
PrimalSolution wasserstein_primal(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const CostMatrix& cost);

/// Same value through the Kantorovich-Rubinstein dual
///   max phi . (x - y)  s.t.  |phi_i - phi_j| <= c_ij,
/// solved as a dense LP by an independent tableau simplex (Bland's rule).
/// Deliberately shares no code with the primal solver; size-capped because a
/// dense tableau over all ordered pairs grows as n^2 rows.
DualSolution wasserstein_dual(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const CostMatrix& cost, int size_cap = 48);

/// Convenience: |primal - dual|.
double duality_gap(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const CostMatrix& cost);

/// Transport-based lower bound on how much work moving x0 to xt requires,
/// when a mass mu = x_Y(xt) - x_{Xc}(x0) must newly arrive in Y from the
/// complement of X: returns mu * d(X,Y)^alpha_eps (0 when mu <= 0).
double region_transfer_lower_bound(const Eigen::VectorXd& x0, const Eigen::VectorXd& xt,
                                   const Region& x_region, const Region& y_region,
                                   const LatticeGeometry& lattice, double alpha_eps);

/// Shortest-path cost between two same-sector configurations on the graph
/// whose edges are single-boson hops between any site pair (i, j) with weight
/// ||i-j||^alpha_eps.  Dijkstra over lazily expanded configurations; when the
/// expansion exceeds `node_cap` the returned value falls back to a certified
/// lower bound and `exact` flips to false.
struct ConfigCost {
  double value = 0.0;
  bool exact = true;
};
ConfigCost config_cost(const FockBasis& basis, std::size_t a, std::size_t b,
                       const LatticeGeometry& lattice, double alpha_eps,
                       std::size_t node_cap = 200000);

/// Dense cost matrix over every configuration pair of a (small) sector.
Eigen::MatrixXd config_cost_matrix(const FockBasis& basis, const LatticeGeometry& lattice,
                                   double alpha_eps, std::size_t node_cap = 200000);

/// W between two distributions over configurations under a precomputed
/// configuration cost table.
double wasserstein_configs(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& config_costs);

}  // namespace bosecone
