#pragma once

// Constructive transfer protocols built from exactly solvable two-site gates:
// piecewise-constant stage schedules that move a macroscopic boson cloud
// across a chain, together with their closed-form stage durations and the
// intermediate configurations they are expected to pass through.

#include <memory>
#include <vector>

#include "bosecone/evolve.hpp"
#include "bosecone/fock.hpp"
#include "bosecone/hamiltonian.hpp"
#include "bosecone/lattice.hpp"

namespace bosecone {

// The four exactly solvable two-site gates over the sector of M bosons on a
// pair of sites (occupations written (n_first, n_second)):
//
//   HoppingSwap   hop only                     (M-1,1) <-> (1,M-1)  t = pi/(2J)
//   AssistedSwap  hop + pair tunneling         (M-1,1) <-> (1,M-1)  t = pi/(2JM)
//   BlockadeStep  hop + strong blockade        (k,M-k) -> (k-1,M-k+1)
//                                              t = pi/(2J sqrt(k(M-k+1)))
//   AssistedStep  hop + tunneling + blockade   (k,M-k) -> (k-1,M-k+1)
//                                              t = pi/(2JM sqrt(k(M-k+1)))
//
// The swaps need M = 1 or M >= 3 (at M = 2 the corner element is diagonal and
// nothing is transferred); the steps need M >= 3 and 1 <= k <= M and become
// exact only in the hard-blockade limit U -> infinity.
enum class TwoSiteGate { HoppingSwap, AssistedSwap, BlockadeStep, AssistedStep };

bool gate_uses_blockade(TwoSiteGate gate);
bool gate_uses_tunneling(TwoSiteGate gate);

// Closed-form gate duration; k is ignored for the swaps.
double two_site_gate_time(TwoSiteGate gate, int m, int k, double j);

// Source / target occupations (n_first, n_second) the gate exchanges.
std::pair<Configuration, Configuration> two_site_gate_endpoints(TwoSiteGate gate, int m, int k);

// The gate Hamiltonian on an explicit two-site chain; u is the blockade
// strength (ignored for the swaps).
HamiltonianModel two_site_gate_model(TwoSiteGate gate, int m, int k, double j, double u);

// Fidelity of the gate executed at finite blockade strength, one entry per
// element of u_values: |<target| exp(-i H t) |source>|^2.  Only meaningful
// for the blockade gates; throws ValidationError otherwise.
std::vector<double> finite_u_convergence(TwoSiteGate gate, int m, int k, double j,
                                         const std::vector<double>& u_values,
                                         const EvolveOptions& options = {});

// A stage schedule over one shared chain sector, with the configuration the
// state should occupy after selected stages.
struct Checkpoint {
  std::size_t stage_index = 0;  // checkpoint holds after this stage
  Configuration expected;
};

struct ProtocolSchedule {
  std::shared_ptr<const LatticeGeometry> lattice;
  std::shared_ptr<const FockBasis> basis;
  std::vector<Stage> stages;
  Configuration initial;
  Configuration target;
  std::vector<Checkpoint> checkpoints;
  double analytic_total_time = 0.0;  // sum of the closed-form stage durations
  bool uses_tunneling = false;
};

// All n bosons start on the first site of a chain of the given length and are
// carried to the last site one boson at a time: for each bond, a blockade
// step peels one boson off the cloud, a bare hopping swap flips the cloud
// across the bond, and a final blockade step completes the handover
// ((n,0) -> (n-1,1) -> (1,n-1) -> (0,n)).  Per-bond time
// pi/(2J) + pi/(J sqrt(n)); hop-only plus interactions, so the transfer obeys
// the long-range speed limits.
ProtocolSchedule sequential_mott_transfer(int length, int n_bosons, double j, double u);

// Same transfer accomplished with pair-tunneling assistance: per bond the
// three-stage subprotocol (L,0) -> (L-1,1) -> (1,L-1) -> (0,L) with stage
// times pi/(2JL sqrt(L)), pi/(2JL), pi/(2JL sqrt(L)), where L is both the
// chain length and the boson number.  Total time stays below pi/J for every
// length, which outruns any power-law light cone.
ProtocolSchedule supersonic_transfer(int length, double j, double u);

// Footnote variant of the assisted transfer: per bond, the cloud is walked
// across one boson at a time by a cascade of assisted steps k = L, ..., 1.
ProtocolSchedule stepwise_mott_transfer(int length, double j, double u);

// Exact-integer form of the "total under pi/J" budget inequality for the
// assisted transfer: (L-1)(1/L + 2/L^{3/2}) < 2  <=>  4(L-1)^2 < L(L+1)^2.
bool supersonic_total_under_budget(long long length);
double supersonic_total_time(int length, double j);

struct ProtocolResult {
  Trajectory trajectory;
  double fidelity = 0.0;                      // to the schedule's target
  std::vector<double> checkpoint_fidelities;  // aligned with schedule.checkpoints
};

// Runs the schedule from its initial Mott configuration and scores the
// terminal and checkpoint fidelities.
ProtocolResult execute_protocol(const ProtocolSchedule& schedule,
                                const EvolveOptions& options = {});

}  // namespace bosecone
