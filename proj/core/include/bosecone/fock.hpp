#pragma once

#include <complex>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bosecone/lattice.hpp"

namespace bosecone {

/// Site occupations; invariant: entries >= 0, sum equals the sector total.
using Configuration = std::vector<int>;

/// Fixed-total-boson Fock basis over S sites, dimension C(N+S-1, N).
/// Configurations are stored in descending lexicographic order, e.g.
/// (S=2, N=3): (3,0), (2,1), (1,2), (0,3).
class FockBasis {
 public:
  static FockBasis enumerate(int n_sites, int n_bosons, std::size_t dim_cap = 200000);

  int n_sites() const { return n_sites_; }
  int n_bosons() const { return n_bosons_; }
  std::size_t dim() const { return configs_.size(); }
  const Configuration& config(std::size_t idx) const { return configs_[idx]; }
  const std::vector<Configuration>& configs() const { return configs_; }

  /// Index of a configuration; throws if it is not in this sector.
  std::size_t index_of(const Configuration& c) const;

 private:
  int n_sites_ = 0;
  int n_bosons_ = 0;
  std::vector<Configuration> configs_;
  // rank lookup: descending-lex rank computed combinatorially
  std::size_t rank(const Configuration& c) const;
};

/// One boson hop away from `c`: the configuration reached by moving a boson
/// from site `from` to site `to`, with matrix element factor
/// sqrt(n_from * (n_to + 1)) evaluated at the source occupations.
struct Hop {
  std::size_t target;  ///< basis index of the resulting configuration
  int from = 0;
  int to = 0;
  double amp = 0.0;      ///< sqrt(n_from (n_to + 1))
  int pair_total = 0;    ///< n_from + n_to before the hop
};

/// All single-hop neighbors of basis state `idx` (ordered by (from, to)).
std::vector<Hop> hop_neighbors(const FockBasis& basis, std::size_t idx);

/// Total occupation of region X in configuration c.
int region_number(const Configuration& c, const Region& x);

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

struct PureState {
  Eigen::VectorXcd amps;

  static PureState basis_state(const FockBasis& basis, const Configuration& c);
  double norm_sq() const { return amps.squaredNorm(); }
};

/// Convex mixture of pure states (weights sum to 1).  The scalable stand-in
/// for a density matrix: every observable used here is linear in the state.
struct StateEnsemble {
  std::vector<double> weights;
  std::vector<PureState> members;
};

struct DensityMatrix {
  Eigen::MatrixXcd rho;

  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix from_ensemble(const StateEnsemble& ens);
  double trace_defect() const;  ///< |tr(rho) - 1|
};

using State = std::variant<PureState, StateEnsemble, DensityMatrix>;

std::size_t state_dim(const State& s);

/// Concentration vector x_i = <n_i>/N; entries sum to 1.
Eigen::VectorXd concentrations(const State& s, const FockBasis& basis);

enum class NumberPredicate { AtMost, AtLeast };

/// Expectation of the projector onto { configurations c : n_X(c) <= N0 } (or
/// >= N0), i.e. the probability weight the state puts on that shell of the
/// number operator of region X.
double projector_weight(const State& s, const FockBasis& basis, const Region& x,
                        NumberPredicate pred, int n0);

/// One-body coherence <b_i^dag b_j>.
std::complex<double> coherence(const State& s, const FockBasis& basis, int i, int j);

/// Probability of basis configuration `idx` (diagonal of the density matrix).
double config_probability(const State& s, std::size_t idx);

/// |<target|state>|^2 against a basis configuration; for ensembles the
/// weighted average, for density matrices <target|rho|target>.
double fidelity_to_config(const State& s, const FockBasis& basis, const Configuration& target);

/// Overlap fidelity |<a|b>|^2 between two pure states.
double fidelity(const PureState& a, const PureState& b);

}  // namespace bosecone
