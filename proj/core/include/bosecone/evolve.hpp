#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bosecone/hamiltonian.hpp"

namespace bosecone {

/// One piecewise-constant leg of a schedule.
struct Stage {
  HamiltonianModel model;
  double duration = 0.0;
};

/// Propagates states under a fixed Hamiltonian.  Small problems use a dense
/// eigendecomposition (exact up to rounding); larger ones use an adaptive
/// Lanczos/Krylov exponential with per-step error control.
class StagePropagator {
 public:
  StagePropagator(const SparseHamiltonian& h, std::size_t dense_cutoff = 512,
                  double krylov_tol = 1e-11);

  bool dense() const { return dense_; }

  /// psi(t) from the stage-start vector.  On the dense path this evaluates the
  /// exact propagator at t (no error accumulation across calls); on the Krylov
  /// path it advances step by step.
  Eigen::VectorXcd at(const Eigen::VectorXcd& psi0, double t) const;

  /// In-place advance by dt (dt >= 0).
  void advance(Eigen::VectorXcd& psi, double dt) const;

  /// rho(t) = U rho U^dag; dense path only.
  Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& rho, double t) const;

  /// Dense-path helpers for repeated evaluation from one start vector:
  /// project = V^T psi0, reconstruct = V (e^{-i lambda t} . w0).
  Eigen::VectorXcd project(const Eigen::VectorXcd& psi0) const;
  Eigen::VectorXcd reconstruct(const Eigen::VectorXcd& w0, double t) const;

 private:
  bool dense_ = true;
  double krylov_tol_ = 1e-11;
  Eigen::SparseMatrix<std::complex<double>> hc_;  // Krylov path operator
  Eigen::MatrixXd vecs_;
  Eigen::VectorXd vals_;
  double spectral_radius_ = 0.0;

  void krylov_step(Eigen::VectorXcd& psi, double dt) const;
};

/// Site-to-site one-body flows
///   phi_ij = 2 J_ij Im <b_i^dag b_j> / N,
/// antisymmetric; d x_i/dt = sum_j phi_ij.  Ensembles average by linearity.
Eigen::MatrixXd site_flows(const State& s, const HamiltonianModel& model);

/// Transport velocity term Phi = (1/2) sum_{i != j} c_ij |phi_ij|.
double velocity_term(const Eigen::MatrixXd& flows, const CostMatrix& cost);

/// Probability current between configurations a and b = (hop i->j applied to
/// a):  phi_ab = -2 K_ij sqrt(n_i (n_j + 1)) Im rho_ab with K the hopping
/// amplitude; d p_a/dt = sum phi over hops out of a.  Undefined (rejected)
/// when assisted tunneling is present.
struct ConfigCurrent {
  std::size_t a = 0, b = 0;
  int from = 0, to = 0;
  double value = 0.0;
};
std::vector<ConfigCurrent> config_currents(const State& s, const HamiltonianModel& model);

struct TrajectorySample {
  double t = 0.0;
  Eigen::VectorXd x;          ///< concentrations
  double phi = 0.0;           ///< velocity term, NaN when no cost matrix given
  int stage = 0;
};

struct EvolveOptions {
  int samples_per_stage = 64;
  std::size_t dense_cutoff = 512;
  double krylov_tol = 1e-11;
  double norm_abort = 1e-8;
  bool record_states = false;               ///< keep a state snapshot per sample
  const CostMatrix* cost = nullptr;         ///< enables the phi column
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<State> states;      ///< filled when record_states
  State final_state;
  double duration = 0.0;
  double norm_defect = 0.0;       ///< worst |norm - 1| seen
  bool tunneling_present = false;
  int n_bosons = 0;

  const Eigen::VectorXd& initial_concentrations() const { return samples.front().x; }
  const Eigen::VectorXd& final_concentrations() const { return samples.back().x; }
};

/// Evolves `initial` through the stage list, sampling each stage on a uniform
/// sub-grid (stage ends always included).  All stages must share one basis.
/// Norm drift beyond options.norm_abort raises NumericalError.
Trajectory evolve(const State& initial, std::span<const Stage> stages,
                  const EvolveOptions& options = {});

/// Time average <Phi>_tau = (1/tau) int_0^tau Phi dt with per-stage adaptive
/// trapezoid refinement (Richardson-extrapolated), refined until successive
/// estimates differ by at most rel_tol relatively; `uncertainty` is the last
/// successive difference, a conservative error proxy.
struct AveragedVelocity {
  double mean = 0.0;
  double uncertainty = 0.0;
  double total_time = 0.0;
};
AveragedVelocity average_velocity_term(const State& initial, std::span<const Stage> stages,
                                       const CostMatrix& cost, double rel_tol = 1e-7,
                                       const EvolveOptions& options = {});

}  // namespace bosecone
