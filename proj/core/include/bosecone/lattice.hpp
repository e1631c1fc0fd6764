#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "bosecone/common.hpp"

namespace bosecone {

/// A subset of lattice sites, kept sorted and duplicate-free.
struct Region {
  std::vector<int> sites;

  Region() = default;
  Region(std::initializer_list<int> s);
  explicit Region(std::vector<int> s);

  bool contains(int site) const;
  bool empty() const { return sites.empty(); }
  std::size_t size() const { return sites.size(); }
};

bool regions_disjoint(const Region& a, const Region& b);

/// Finite D-dimensional hypercubic lattice with integer coordinates and
/// Euclidean metric.  Sites are indexed row-major over the extents.
class LatticeGeometry {
 public:
  /// Builds the lattice.  extents must have `dimension` positive entries and
  /// the total site count must stay within `site_cap` (default 4096).
  static LatticeGeometry hypercubic(int dimension, const std::vector<int>& extents,
                                    std::size_t site_cap = 4096);

  /// Convenience: 1-D chain of n sites.
  static LatticeGeometry chain(int n_sites);

  int dimension() const { return dimension_; }
  int n_sites() const { return static_cast<int>(coords_.size()); }
  const std::vector<int>& extents() const { return extents_; }
  const std::vector<int>& coordinates(int site) const;
  int site_index(const std::vector<int>& coord) const;

  /// Euclidean distance between two sites.
  double distance(int i, int j) const;
  /// Squared distance, exact in integer arithmetic.
  std::int64_t distance_sq(int i, int j) const;

  /// min_{i in X, j in Y} ||i-j||.  X and Y must be non-empty, in range and
  /// disjoint (a transport distance of zero has no meaning here).
  double set_distance(const Region& x, const Region& y) const;

  /// Sites j with l <= ||i-j|| < l+1, decided in exact integer arithmetic
  /// (l^2 <= ||i-j||^2 < (l+1)^2).  shell(i,0) == {i}.
  std::vector<int> shell(int site, int l) const;

  Region complement(const Region& x) const;

  void validate_region(const Region& x, const char* name) const;

 private:
  int dimension_ = 0;
  std::vector<int> extents_;
  std::vector<std::vector<int>> coords_;
  std::vector<int> strides_;
};

/// Shell-count constant: the smallest gamma with
///   |{j : l <= ||i-j|| < l+1}| <= gamma * max(l,1)^(D-1)
/// over all sites i and integer radii l >= 0.
struct ShellConstant {
  double value = 0.0;
  int radius_cap = 0;           ///< shells enumerated up to this radius
  bool finite_lattice_only = false;  ///< true when derived from one finite lattice
};

/// Infinite-lattice shell constant for Z^D.  D == 1 is analytic (2); D == 2, 3
/// are enumerated exactly out to `radius_cap`; D > 3 is not supported here
/// (use the finite-lattice overload, which flags itself).
ShellConstant shell_constant(int dimension, int radius_cap = 64);

/// Shell constant measured on one finite lattice.  Matches the infinite value
/// for D <= 3 when the lattice is large enough; always flagged for D > 3.
ShellConstant shell_constant(const LatticeGeometry& lattice);

/// Dense symmetric cost matrix.  Entries are nonnegative, have zero diagonal
/// and satisfy the triangle inequality (verified on construction for tables;
/// guaranteed by subadditivity for lattice power-law costs with exponent in
/// (0, 1]).
class CostMatrix {
 public:
  /// c_ij = ||i-j||^alpha_eps over all lattice sites; alpha_eps in (0,1].
  static CostMatrix power_law(const LatticeGeometry& lattice, double alpha_eps);

  /// Same, restricted to a subset of sites (cost sub-matrix keeps the metric
  /// property).
  static CostMatrix power_law(const LatticeGeometry& lattice, double alpha_eps,
                              const std::vector<int>& support);

  /// Explicit table; verified (symmetry, zero diagonal, nonnegativity,
  /// triangle inequality) unless `trusted`.
  static CostMatrix from_table(Eigen::MatrixXd table, bool trusted = false);

  int size() const { return static_cast<int>(c_.rows()); }
  double operator()(int i, int j) const { return c_(i, j); }
  const Eigen::MatrixXd& table() const { return c_; }
  double exponent() const { return alpha_eps_; }  ///< NaN for explicit tables

 private:
  Eigen::MatrixXd c_;
  double alpha_eps_ = std::numeric_limits<double>::quiet_NaN();
};

/// True iff c_ij <= c_ik + c_kj for all triples within `tol`.
bool verify_triangle(const Eigen::MatrixXd& c, double tol = 1e-12);

}  // namespace bosecone
