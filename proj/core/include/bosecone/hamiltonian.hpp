#pragma once

#include <functional>
#include <memory>
#include <optional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "bosecone/fock.hpp"
#include "bosecone/lattice.hpp"

namespace bosecone {

/// Certifies |J_ij| <= strength / ||i-j||^alpha for every pair.
struct DecayCertificate {
  double strength = 0.0;  ///< J
  double alpha = 0.0;     ///< decay exponent, must exceed the lattice dimension
};

/// Symmetric single-boson hopping amplitudes J_ij (zero diagonal).
struct HoppingSpec {
  Eigen::MatrixXd amplitude;
  std::optional<DecayCertificate> decay;

  /// J_ij = strength / ||i-j||^alpha for every pair (saturates the certificate).
  static HoppingSpec power_law(const LatticeGeometry& lattice, double strength, double alpha);
  /// Nearest neighbors only (||i-j|| == 1), carrying a power-law certificate.
  static HoppingSpec nearest_neighbor(const LatticeGeometry& lattice, double strength,
                                      double alpha);
  /// A single active pair (a, b).
  static HoppingSpec pair(const LatticeGeometry& lattice, int a, int b, double strength,
                          double alpha);
  static HoppingSpec none(const LatticeGeometry& lattice);
};

/// Arbitrary diagonal (number-operator) part, evaluated per configuration.
struct InteractionSpec {
  std::function<double(const Configuration&)> energy;

  static InteractionSpec none();
  /// (U/2) sum_i n_i(n_i-1) - mu sum_i n_i
  static InteractionSpec bose_hubbard(double u, double mu);
  /// quadratic * n_site^2 + linear * n_site on one site
  static InteractionSpec on_site(int site, double quadratic, double linear);
  static InteractionSpec sum(InteractionSpec a, InteractionSpec b);
};

/// Density-assisted (interaction-induced) tunneling amplitudes T_ij for the
/// term T_ij b_i^dag (n_i + n_j) b_j.  Restricted to nearest-neighbor pairs
/// on 1-D chains; the boson-configuration current extraction is undefined
/// otherwise.
struct TunnelingSpec {
  Eigen::MatrixXd amplitude;

  static TunnelingSpec pair(const LatticeGeometry& lattice, int a, int b, double strength);
};

/// One piecewise-constant Hamiltonian: hopping + optional assisted tunneling
/// + diagonal interaction on a fixed particle-number sector.
struct HamiltonianModel {
  std::shared_ptr<const LatticeGeometry> lattice;
  std::shared_ptr<const FockBasis> basis;
  HoppingSpec hopping;
  InteractionSpec interaction;
  std::optional<TunnelingSpec> tunneling;

  bool has_tunneling() const;
};

/// Checks the model's decay certificate entrywise; returns the largest excess
/// |J_ij| - strength/||i-j||^alpha (<= 0 means certified).  Models without a
/// certificate are rejected.
double hopping_decay_excess(const HamiltonianModel& model);
bool verify_hopping_decay(const HamiltonianModel& model, double tol = 1e-12);

/// Real symmetric sparse matrix in the Fock basis.
class SparseHamiltonian {
 public:
  explicit SparseHamiltonian(Eigen::SparseMatrix<double> h) : h_(std::move(h)) {}

  std::size_t dim() const { return static_cast<std::size_t>(h_.rows()); }
  const Eigen::SparseMatrix<double>& matrix() const { return h_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(h_); }

  void apply(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const { out.noalias() = h_ * in; }

  /// max_ij |H_ij - H_ji|
  double hermiticity_defect() const;

 private:
  Eigen::SparseMatrix<double> h_;
};

/// Assembles the matrix.  Matrix elements:
///   hop (from -> to):      J_to,from * sqrt(n_from (n_to + 1))
///   assisted tunneling:    T_to,from * (n_from + n_to - 1) * sqrt(n_from (n_to + 1))
/// (occupations evaluated before the hop), plus the diagonal interaction.
/// Rejects models whose decay certificate is violated.
SparseHamiltonian materialize(const HamiltonianModel& model);

}  // namespace bosecone
