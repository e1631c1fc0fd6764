#include "bosecone/protocols.hpp"

#include <cmath>
#include <numbers>

namespace bosecone {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_gate(TwoSiteGate gate, int m, int k, double j) {
  if (!(j > 0.0)) throw ValidationError("two-site gate: requires J > 0");
  switch (gate) {
    case TwoSiteGate::HoppingSwap:
    case TwoSiteGate::AssistedSwap:
      if (m != 1 && m < 3)
        throw ValidationError("two-site swap: requires M = 1 or M >= 3");
      if (gate == TwoSiteGate::AssistedSwap && m < 3)
        throw ValidationError("assisted swap: requires M >= 3");
      break;
    case TwoSiteGate::BlockadeStep:
    case TwoSiteGate::AssistedStep:
      if (m < 3) throw ValidationError("two-site step: requires M >= 3");
      if (k < 1 || k > m) throw ValidationError("two-site step: requires 1 <= k <= M");
      break;
  }
}

// stage helpers shared by the schedule builders --------------------------------

struct ChainContext {
  std::shared_ptr<const LatticeGeometry> lattice;
  std::shared_ptr<const FockBasis> basis;
};

ChainContext make_chain(int length, int n_bosons) {
  ChainContext ctx;
  ctx.lattice = std::make_shared<LatticeGeometry>(LatticeGeometry::chain(length));
  ctx.basis =
      std::make_shared<FockBasis>(FockBasis::enumerate(length, n_bosons));
  return ctx;
}

// Hop (and optionally tunneling / blockade) on one bond (a, a+1) of the chain.
HamiltonianModel bond_model(const ChainContext& ctx, int a, double j, bool tunneling,
                            bool blockade, int m, int k, double u) {
  HamiltonianModel model;
  model.lattice = ctx.lattice;
  model.basis = ctx.basis;
  model.hopping = HoppingSpec::pair(*ctx.lattice, a, a + 1, j, 3.0);
  model.interaction =
      blockade ? InteractionSpec::on_site(a + 1, -u, u * (2.0 * m - 2.0 * k + 1.0))
               : InteractionSpec::none();
  if (tunneling) model.tunneling = TunnelingSpec::pair(*ctx.lattice, a, a + 1, j);
  return model;
}

Configuration pair_config(int length, int bond, int n_first, int n_second) {
  Configuration c(length, 0);
  c[bond] = n_first;
  c[bond + 1] = n_second;
  return c;
}

}  // namespace

bool gate_uses_blockade(TwoSiteGate gate) {
  return gate == TwoSiteGate::BlockadeStep || gate == TwoSiteGate::AssistedStep;
}

bool gate_uses_tunneling(TwoSiteGate gate) {
  return gate == TwoSiteGate::AssistedSwap || gate == TwoSiteGate::AssistedStep;
}

double two_site_gate_time(TwoSiteGate gate, int m, int k, double j) {
  validate_gate(gate, m, k, j);
  switch (gate) {
    case TwoSiteGate::HoppingSwap:
      return kPi / (2.0 * j);
    case TwoSiteGate::AssistedSwap:
      return kPi / (2.0 * j * m);
    case TwoSiteGate::BlockadeStep:
      return kPi / (2.0 * j * std::sqrt(static_cast<double>(k) * (m - k + 1)));
    case TwoSiteGate::AssistedStep:
      return kPi / (2.0 * j * m * std::sqrt(static_cast<double>(k) * (m - k + 1)));
  }
  throw ValidationError("two-site gate: unknown gate");
}

std::pair<Configuration, Configuration> two_site_gate_endpoints(TwoSiteGate gate, int m,
                                                                int k) {
  validate_gate(gate, m, k, 1.0);
  if (gate == TwoSiteGate::HoppingSwap || gate == TwoSiteGate::AssistedSwap) {
    if (m == 1) return {{1, 0}, {0, 1}};
    return {{m - 1, 1}, {1, m - 1}};
  }
  return {{k, m - k}, {k - 1, m - k + 1}};
}

HamiltonianModel two_site_gate_model(TwoSiteGate gate, int m, int k, double j, double u) {
  validate_gate(gate, m, k, j);
  if (gate_uses_blockade(gate) && !(u > 0.0))
    throw ValidationError("two-site gate: blockade gates require U > 0");
  ChainContext ctx = make_chain(2, m);
  return bond_model(ctx, 0, j, gate_uses_tunneling(gate), gate_uses_blockade(gate), m, k,
                    u);
}

std::vector<double> finite_u_convergence(TwoSiteGate gate, int m, int k, double j,
                                         const std::vector<double>& u_values,
                                         const EvolveOptions& options) {
  if (!gate_uses_blockade(gate))
    throw ValidationError("finite-blockade scan: gate has no blockade strength");
  if (u_values.empty()) throw ValidationError("finite-blockade scan: empty U list");
  auto [source, target] = two_site_gate_endpoints(gate, m, k);
  const double t = two_site_gate_time(gate, m, k, j);
  std::vector<double> fidelities;
  fidelities.reserve(u_values.size());
  for (double u : u_values) {
    HamiltonianModel model = two_site_gate_model(gate, m, k, j, u);
    PureState psi = PureState::basis_state(*model.basis, source);
    std::vector<Stage> stages{{model, t}};
    Trajectory traj = evolve(psi, stages, options);
    fidelities.push_back(fidelity_to_config(traj.final_state, *model.basis, target));
  }
  return fidelities;
}

ProtocolSchedule sequential_mott_transfer(int length, int n_bosons, double j, double u) {
  if (length < 2) throw ValidationError("sequential transfer: requires length >= 2");
  if (n_bosons < 3) throw ValidationError("sequential transfer: requires at least 3 bosons");
  if (!(j > 0.0) || !(u > 0.0))
    throw ValidationError("sequential transfer: requires J > 0 and U > 0");
  ChainContext ctx = make_chain(length, n_bosons);
  ProtocolSchedule sched;
  sched.lattice = ctx.lattice;
  sched.basis = ctx.basis;
  sched.initial = pair_config(length, 0, n_bosons, 0);
  sched.target = Configuration(length, 0);
  sched.target[length - 1] = n_bosons;
  sched.uses_tunneling = false;
  const int m = n_bosons;
  const double t_peel = two_site_gate_time(TwoSiteGate::BlockadeStep, m, m, j);
  const double t_swap = two_site_gate_time(TwoSiteGate::HoppingSwap, m, 1, j);
  const double t_land = two_site_gate_time(TwoSiteGate::BlockadeStep, m, 1, j);
  for (int bond = 0; bond + 1 < length; ++bond) {
    sched.stages.push_back({bond_model(ctx, bond, j, false, true, m, m, u), t_peel});
    sched.checkpoints.push_back(
        {sched.stages.size() - 1, pair_config(length, bond, m - 1, 1)});
    sched.stages.push_back({bond_model(ctx, bond, j, false, false, m, 0, u), t_swap});
    sched.checkpoints.push_back(
        {sched.stages.size() - 1, pair_config(length, bond, 1, m - 1)});
    sched.stages.push_back({bond_model(ctx, bond, j, false, true, m, 1, u), t_land});
    sched.checkpoints.push_back(
        {sched.stages.size() - 1, pair_config(length, bond, 0, m)});
    sched.analytic_total_time += t_peel + t_swap + t_land;
  }
  return sched;
}

ProtocolSchedule supersonic_transfer(int length, double j, double u) {
  if (length < 3) throw ValidationError("assisted transfer: requires length >= 3");
  if (!(j > 0.0) || !(u > 0.0))
    throw ValidationError("assisted transfer: requires J > 0 and U > 0");
  const int m = length;  // boson number equals the chain length
  ChainContext ctx = make_chain(length, m);
  ProtocolSchedule sched;
  sched.lattice = ctx.lattice;
  sched.basis = ctx.basis;
  sched.initial = pair_config(length, 0, m, 0);
  sched.target = Configuration(length, 0);
  sched.target[length - 1] = m;
  sched.uses_tunneling = true;
  const double t_step = two_site_gate_time(TwoSiteGate::AssistedStep, m, m, j);
  const double t_swap = two_site_gate_time(TwoSiteGate::AssistedSwap, m, 0, j);
  for (int bond = 0; bond + 1 < length; ++bond) {
    sched.stages.push_back({bond_model(ctx, bond, j, true, true, m, m, u), t_step});
    sched.checkpoints.push_back(
        {sched.stages.size() - 1, pair_config(length, bond, m - 1, 1)});
    sched.stages.push_back({bond_model(ctx, bond, j, true, false, m, 0, u), t_swap});
    sched.checkpoints.push_back(
        {sched.stages.size() - 1, pair_config(length, bond, 1, m - 1)});
    sched.stages.push_back({bond_model(ctx, bond, j, true, true, m, 1, u), t_step});
    sched.checkpoints.push_back(
        {sched.stages.size() - 1, pair_config(length, bond, 0, m)});
    sched.analytic_total_time += 2.0 * t_step + t_swap;
  }
  return sched;
}

ProtocolSchedule stepwise_mott_transfer(int length, double j, double u) {
  if (length < 3) throw ValidationError("stepwise transfer: requires length >= 3");
  if (!(j > 0.0) || !(u > 0.0))
    throw ValidationError("stepwise transfer: requires J > 0 and U > 0");
  const int m = length;
  ChainContext ctx = make_chain(length, m);
  ProtocolSchedule sched;
  sched.lattice = ctx.lattice;
  sched.basis = ctx.basis;
  sched.initial = pair_config(length, 0, m, 0);
  sched.target = Configuration(length, 0);
  sched.target[length - 1] = m;
  sched.uses_tunneling = true;
  for (int bond = 0; bond + 1 < length; ++bond) {
    for (int k = m; k >= 1; --k) {
      const double t = two_site_gate_time(TwoSiteGate::AssistedStep, m, k, j);
      sched.stages.push_back({bond_model(ctx, bond, j, true, true, m, k, u), t});
      sched.checkpoints.push_back(
          {sched.stages.size() - 1, pair_config(length, bond, k - 1, m - k + 1)});
      sched.analytic_total_time += t;
    }
  }
  return sched;
}

bool supersonic_total_under_budget(long long length) {
  if (length < 2) throw ValidationError("budget check: requires length >= 2");
  // (L-1)(1/L + 2/L^{3/2}) < 2  <=>  2(L-1) < sqrt(L)(L+1)  <=>
  // 4(L-1)^2 < L(L+1)^2, exact in integers for lengths up to ~10^6.
  if (length > 1000000) throw ValidationError("budget check: length out of range");
  const long long lhs = 4 * (length - 1) * (length - 1);
  const long long rhs = length * (length + 1) * (length + 1);
  return lhs < rhs;
}

double supersonic_total_time(int length, double j) {
  if (length < 3) throw ValidationError("assisted transfer: requires length >= 3");
  if (!(j > 0.0)) throw ValidationError("assisted transfer: requires J > 0");
  const double el = length;
  return kPi / (2.0 * j) * (el - 1.0) * (1.0 / el + 2.0 / (el * std::sqrt(el)));
}

ProtocolResult execute_protocol(const ProtocolSchedule& schedule,
                                const EvolveOptions& options) {
  if (schedule.stages.empty()) throw ValidationError("protocol: empty schedule");
  EvolveOptions opts = options;
  opts.record_states = true;
  PureState psi = PureState::basis_state(*schedule.basis, schedule.initial);
  ProtocolResult result;
  result.trajectory = evolve(psi, schedule.stages, opts);
  result.fidelity =
      fidelity_to_config(result.trajectory.final_state, *schedule.basis, schedule.target);
  result.checkpoint_fidelities.reserve(schedule.checkpoints.size());
  for (const Checkpoint& cp : schedule.checkpoints) {
    // last recorded sample belonging to this stage = the stage's end point
    const std::size_t none = result.trajectory.samples.size();
    std::size_t found = none;
    for (std::size_t i = result.trajectory.samples.size(); i-- > 0;) {
      if (result.trajectory.samples[i].stage == static_cast<int>(cp.stage_index)) {
        found = i;
        break;
      }
    }
    if (found == none)
      throw NumericalError("protocol: no recorded sample at a checkpoint stage");
    result.checkpoint_fidelities.push_back(
        fidelity_to_config(result.trajectory.states[found], *schedule.basis, cp.expected));
  }
  return result;
}

}  // namespace bosecone
