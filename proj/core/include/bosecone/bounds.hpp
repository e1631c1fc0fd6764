#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bosecone/evolve.hpp"
#include "bosecone/transport.hpp"

namespace bosecone {

/// Riemann zeta for real s > 1 via Euler-Maclaurin (abs error ~1e-14).
double riemann_zeta(double s);

/// Independent cross-check: direct partial sum plus a midpoint tail estimate
/// with rigorous integral bracketing.  Used by tests to certify riemann_zeta.
double riemann_zeta_direct(double s, int terms = 100000);

/// Parameters of the transport speed limits.
struct BoundParams {
  double j = 1.0;        ///< hopping strength in the decay certificate
  double alpha = 3.0;    ///< decay exponent
  int dim = 1;           ///< lattice dimension D
  double eps = 1.0;      ///< interpolation parameter, 0 < eps < alpha - D
  double gamma = 2.0;    ///< shell-count constant
  double mu = 1.0;       ///< transported concentration fraction, 0 < mu <= 1

  /// min(1, alpha - D - eps)
  double alpha_eps() const;
  /// alpha - D - 1 when alpha > D + 1, else (alpha - D)/2
  static double default_eps(double alpha, int dim);
  void validate() const;
};

/// kappa_1 = mu / (J gamma zeta(alpha - alpha_eps - D + 1))
double kappa1(const BoundParams& p);
/// kappa_2 = J gamma zeta(alpha - alpha_eps - D + 1);  kappa1 * kappa2 == mu
double kappa2(const BoundParams& p);

/// Minimum transport time: tau >= kappa1 * d^alpha_eps, d = d(X,Y) >= 1.
double min_time_bound(const BoundParams& p, double d_xy);

/// Arrival-probability ceiling kappa2 * N * tau / (dN0 * d^alpha_eps),
/// clamped to [0, 1].
double probability_bound(const BoundParams& p, int n_bosons, int d_n0, double tau, double d_xy);

/// Velocity ceiling J gamma zeta(alpha - alpha_eps - D + 1) on the transport
/// term Phi.
double velocity_upper_bound(const BoundParams& p);

/// Markov-inequality refinement of the time bound
///   tau >= [mu'(mu - mu') / (mu (1 - x0 - mu'))] kappa1 d^alpha_eps,
/// with x0 the initial complement concentration x_{Xc}(0).
double markov_time_bound(const BoundParams& p, double d_xy, double x0, double mu_prime);
/// The maximizing mu' = 1 - x0 - sqrt((1 - x0)(1 - x0 - mu)).
double markov_optimal_mu_prime(double mu, double x0);
/// The bracketed prefactor itself (always <= 1).
double markov_prefactor(double mu, double mu_prime, double x0);

/// One emitted bound check.  Never a bare boolean: every report carries the
/// measured value, the bound, the margin actually used and its uncertainty.
struct BoundReport {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double margin = 0.0;       ///< slack granted before flagging a violation
  double uncertainty = 0.0;  ///< numerical uncertainty folded into the margin
  bool satisfied = true;
  bool out_of_scope = false;  ///< hypotheses not met (e.g. assisted tunneling)
  std::string note;
};

/// tau >= W(x_0, x_tau) / <Phi>_tau on a finished trajectory.  `avg` must be
/// the quadrature result for the same schedule/cost.  Flags out-of-scope when
/// the schedule used assisted tunneling.
BoundReport check_speed_limit(const Trajectory& traj, const AveragedVelocity& avg,
                              const CostMatrix& cost, double rel_margin = 1e-6);

/// Macroscopic-transport time bound on a finished trajectory: mu is measured
/// as x_Y(tau) - x_{Xc}(0); requires mu > 0 to be informative.
BoundReport check_min_time(const Trajectory& traj, const Region& x_region,
                           const Region& y_region, const LatticeGeometry& lattice,
                           BoundParams params);

/// Arrival-probability ceiling along a trajectory recorded with states:
/// hypothesis <P_{n_Xc <= N0}> = 1 at t = 0 (within 1e-12), then at every
/// sample <P_{n_Y >= N0 + dN0}> <= kappa2 N t / (dN0 d^alpha_eps) + margin.
std::vector<BoundReport> check_probability_ceiling(const Trajectory& traj,
                                                   const FockBasis& basis,
                                                   const Region& x_region,
                                                   const Region& y_region,
                                                   const LatticeGeometry& lattice,
                                                   BoundParams params, int n0, int d_n0,
                                                   double margin = 1e-9);

/// Pointwise velocity ceiling Phi(state) <= velocity_upper_bound(params).
BoundReport check_velocity_ceiling(const State& s, const HamiltonianModel& model,
                                   const CostMatrix& cost, const BoundParams& params,
                                   double margin = 1e-9);

}  // namespace bosecone
